"""Excitation energies, dispersion scans, and multi-particle continuum edges."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline
from scipy.linalg import eigh

from .assembly import ExcitationAnsatz

__all__ = ["ExcitationBand", "excitation_energies", "dispersion_scan",
           "continuum_edges"]


def excitation_energies(N: np.ndarray, H: np.ndarray,
                        rank_tol: float = 1e-10,
                        ) -> tuple[np.ndarray, np.ndarray]:
    """Solve the generalised problem H v = E N v on the support of N.

    The overlap form ``N`` is diagonalised first; directions with eigenvalue
    below ``rank_tol`` times the largest are null vectors (gauge directions or
    numerically dependent blocks) and are discarded.  Returns ascending
    energies and the corresponding block coefficient vectors (columns, in the
    original basis, normalised to unit physical norm).
    """
    s, V = eigh(0.5 * (N + N.conj().T))
    smax = float(s.max()) if s.size else 0.0
    if smax <= 0.0:
        raise ValueError("overlap form has no positive support")
    keep = s > rank_tol * smax
    W = V[:, keep] / np.sqrt(s[keep])
    Heff = W.conj().T @ H @ W
    Heff = 0.5 * (Heff + Heff.conj().T)
    e, U = eigh(Heff)
    return e, W @ U


@dataclass
class ExcitationBand:
    """Variational excitation energies on a momentum grid."""

    momenta: np.ndarray
    energies: list[np.ndarray]          # ascending energies at each momentum
    ell: int
    n_kept: np.ndarray = field(default_factory=lambda: np.array([], dtype=int))

    @property
    def lowest(self) -> np.ndarray:
        return np.array([e[0] for e in self.energies])

    def table(self, n_bands: int | None = None) -> np.ndarray:
        """Energies as a 2D array (momenta x bands), NaN padded."""
        if n_bands is None:
            n_bands = max(len(e) for e in self.energies)
        out = np.full((len(self.momenta), n_bands), np.nan)
        for i, e in enumerate(self.energies):
            m = min(n_bands, len(e))
            out[i, :m] = e[:m]
        return out


def dispersion_scan(A: np.ndarray, h: np.ndarray, ell: int,
                    momenta: np.ndarray | None = None,
                    rank_tol: float = 1e-10,
                    ansatz: ExcitationAnsatz | None = None) -> ExcitationBand:
    """Variational excitation energies over a momentum grid at block size ell."""
    if momenta is None:
        momenta = np.linspace(0.0, 2.0 * np.pi, 49)
    if ansatz is None:
        ansatz = ExcitationAnsatz(A, ell, h)
    energies = []
    kept = []
    for p in momenta:
        N = ansatz.norm_matrix(p)
        H = ansatz.hamiltonian_matrix(p)
        e, _ = excitation_energies(N, H, rank_tol)
        energies.append(e)
        kept.append(len(e))
    return ExcitationBand(np.asarray(momenta), energies, ell,
                          np.asarray(kept, dtype=int))


def continuum_edges(momenta: np.ndarray, single_band: np.ndarray,
                    orders: tuple[int, ...] = (2, 3),
                    out_momenta: np.ndarray | None = None,
                    n_fine: int = 2001) -> dict[int, np.ndarray]:
    """Lower edges of multi-particle continua built from a single-mode band.

    ``single_band`` samples the one-excitation dispersion on ``momenta`` (a
    grid covering one full Brillouin zone, endpoint included).  The n-particle
    edge is the minimum over single-mode momentum splittings,

        edge_n(p) = min_k [ edge_{n-1}(p - k) + eps(k) ],

    computed on a fine grid from a periodic spline interpolant.
    """
    momenta = np.asarray(momenta, dtype=float)
    single_band = np.asarray(single_band, dtype=float)
    if not np.isclose(momenta[-1] - momenta[0], 2.0 * np.pi):
        raise ValueError("momentum grid must span one full period")
    vals = single_band.copy()
    vals[-1] = vals[0]
    eps = CubicSpline(momenta, vals, bc_type="periodic")
    if out_momenta is None:
        out_momenta = momenta
    kf = np.linspace(0.0, 2.0 * np.pi, n_fine, endpoint=False)
    eps_f = eps(kf)
    edges: dict[int, np.ndarray] = {}
    prev = eps_f
    for n in range(2, max(orders) + 1):
        # minimum over the splitting momentum, on the fine periodic grid
        cur = np.empty_like(eps_f)
        for i, p in enumerate(kf):
            cur[i] = np.min(prev[(i - np.arange(n_fine)) % n_fine] + eps_f)
        cur_at = np.empty(len(out_momenta))
        spl = CubicSpline(np.append(kf, 2.0 * np.pi),
                          np.append(cur, cur[0]), bc_type="periodic")
        cur_at = spl(np.mod(out_momenta, 2.0 * np.pi))
        if n in orders:
            edges[n] = cur_at
        prev = cur
    return edges
