"""Dynamic correlation functions resolved by momentum and frequency.

For a perturbation ``O`` acting on a region, the momentum-``k`` response of
the ground state is carried by the normalised momentum superposition of the
translated, ground-subtracted perturbation.  Expanding in the exact
eigenstates of the momentum sector gives a sum of simple poles,

    D(p, w) = sum_a |<a, p|O(p)|gs>|^2 / (w - E_a + i eps),

whose negative imaginary part over pi is the spectral function ``S``.
Everything here works with the dense eigensolution of one momentum sector, so
pole positions and residues are exact up to diagonalisation accuracy; the
broadened curves exist for output only.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .sector import EigenSector, RegionOperator, momentum_state

__all__ = ["SpectralLine", "dynamic_correlation", "peak_weights"]


@dataclass
class SpectralLine:
    """One momentum channel of the dynamic correlation function."""

    momentum: float            # momentum in radians
    k: int                     # momentum index
    omega: np.ndarray          # frequency grid, energies above the ground state
    eta: float                 # Lorentzian broadening (> 0)
    D: np.ndarray              # complex correlation on the grid
    S: np.ndarray              # spectral function -Im D / pi (>= 0)
    poles: np.ndarray          # sector eigenvalues above the ground state
    residues: np.ndarray       # exact weights |<a, p|O(p)|gs>|^2

    @property
    def total_weight(self) -> float:
        """Sum of residues; equals ||O(p)|gs>||^2 by completeness."""
        return float(np.sum(self.residues))


def peak_weights(line: SpectralLine,
                 weight_floor: float = 0.0) -> tuple[np.ndarray, np.ndarray]:
    """Pole positions and exact residues of a spectral line.

    Residues come from eigenvector overlaps, not from fitting the broadened
    curve.  Entries below ``weight_floor`` times the largest weight are
    dropped.
    """
    energies, weights = line.poles, line.residues
    if weight_floor > 0.0 and weights.size:
        keep = weights > weight_floor * weights.max()
        energies, weights = energies[keep], weights[keep]
    return energies, weights


def dynamic_correlation(O: RegionOperator | np.ndarray, eig: EigenSector,
                        psi0: np.ndarray,
                        omega: np.ndarray | None = None,
                        eta: float | None = None,
                        gap: float | None = None) -> SpectralLine:
    """Momentum-resolved dynamic correlation function of a region perturbation.

    Parameters
    ----------
    O : region operator (its ground-state expectation is subtracted first) or
        a precomputed full-space vector ``O|gs>``.
    eig : dense eigensolution of the target momentum sector with energies
        measured from the global ground energy.
    psi0 : full-space ground state vector.
    omega : frequency grid; default 2001 points on [-gap, E_max + gap].
    eta : Lorentzian broadening; default ``0.02 * gap``; must be positive.
    gap : energy scale for the defaults; default is the smallest positive
        excitation energy in the sector.
    """
    sector = eig.sector
    if isinstance(O, RegionOperator):
        O = O.subtract_ground(psi0)
    coords = momentum_state(O, sector.k, psi0, sector)
    amps = eig.vectors.conj().T @ coords
    poles = eig.energies
    residues = np.abs(amps) ** 2
    if gap is None:
        positive = poles[poles > 1e-10]
        gap = float(positive.min()) if positive.size else 1.0
    if eta is None:
        eta = 0.02 * gap
    if eta <= 0.0:
        raise ValueError("broadening must be positive")
    if omega is None:
        omega = np.linspace(-gap, poles.max() + gap, 2001)
    D = np.sum(residues[None, :]
               / (omega[:, None] - poles[None, :] + 1j * eta), axis=1)
    return SpectralLine(momentum=sector.p, k=sector.k, omega=omega, eta=eta,
                        D=D, S=-D.imag / np.pi, poles=poles, residues=residues)
