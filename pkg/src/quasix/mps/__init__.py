"""Thermodynamic-limit MPS excitation ansatz over a uniform ground state."""

from .tensors import (
    MPSTensor,
    aklt_tensor,
    block_tensor_product,
    mixed_transfer,
    regularized_resolvent_apply,
    transfer_fixed_points,
    transfer_matrix,
)
from .assembly import (
    ExcitationAnsatz,
    effective_hamiltonian_matrix,
    effective_norm_matrix,
    ground_overlap_functional,
    gauge_fix_map,
)
from .bands import (
    ExcitationBand,
    continuum_edges,
    dispersion_scan,
    excitation_energies,
)

__all__ = [
    "ExcitationAnsatz",
    "MPSTensor", "aklt_tensor", "block_tensor_product", "mixed_transfer",
    "regularized_resolvent_apply", "transfer_fixed_points", "transfer_matrix",
    "effective_hamiltonian_matrix", "effective_norm_matrix",
    "ground_overlap_functional", "gauge_fix_map",
    "ExcitationBand", "continuum_edges", "dispersion_scan", "excitation_energies",
]
