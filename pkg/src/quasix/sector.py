"""Momentum-resolved exact diagonalization of periodic chains.

Basis states are integers in base d with site 0 as the most significant
digit.  The translation operator T shifts configurations one site to the
right; momentum sectors are spanned by orbit representatives with the
phase convention

    |a(p)> = R^{-1/2} sum_{j=0}^{R-1} e^{i p j} T^j |s_a>,

so that T |a(p)> = e^{-ip} |a(p)>.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .lattice import Region
from .models import LocalHamiltonian, embed_operator


# ---------------------------------------------------------------------------
# configuration bookkeeping

@lru_cache(maxsize=16)
def translation_table(N: int, d: int) -> np.ndarray:
    """Index map tau with T|s> = |tau(s)>: digits rotate one place right."""
    dim = d ** N
    s = np.arange(dim, dtype=np.int64)
    last = s % d
    return last * (d ** (N - 1)) + s // d


@lru_cache(maxsize=16)
def orbit_table(N: int, d: int) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """(rep, shift, period) for every configuration.

    rep[s] is the smallest index in the translation orbit of s,
    shift[s] the smallest j >= 0 with tau^j(s) = rep[s], period[s] the
    orbit length.
    """
    tau = translation_table(N, d)
    dim = tau.size
    s = np.arange(dim, dtype=np.int64)
    rep = s.copy()
    shift = np.zeros(dim, dtype=np.int64)
    period = np.full(dim, N, dtype=np.int64)
    unset = np.ones(dim, dtype=bool)
    t = s
    for j in range(1, N + 1):
        t = tau[t]
        hit = unset & (t == s)
        period[hit] = j
        unset &= ~hit
        smaller = t < rep
        rep[smaller] = t[smaller]
        shift[smaller] = j
    return rep, shift, period


@dataclass
class MomentumSector:
    """Symmetry-adapted basis of one momentum sector."""

    N: int
    d: int
    k: int                      # momentum index, p = 2 pi k / N
    reps: np.ndarray            # orbit representatives, sorted
    periods: np.ndarray
    _index: dict = field(default_factory=dict, repr=False)

    @property
    def p(self) -> float:
        return 2.0 * math.pi * self.k / self.N

    @property
    def dim(self) -> int:
        return len(self.reps)

    def index_of(self, rep: int) -> int:
        i = int(np.searchsorted(self.reps, rep))
        if i >= self.dim or self.reps[i] != rep:
            raise KeyError(rep)
        return i

    def basis_matrix(self) -> sp.csc_matrix:
        """Sparse (d^N x dim) matrix whose columns are the sector basis."""
        tau = translation_table(self.N, self.d)
        rows, cols, vals = [], [], []
        p = self.p
        for col, (s, R) in enumerate(zip(self.reps, self.periods)):
            t = int(s)
            for j in range(int(R)):
                rows.append(t)
                cols.append(col)
                vals.append(np.exp(1j * p * j) / math.sqrt(R))
                t = int(tau[t])
        dim_full = self.d ** self.N
        return sp.csc_matrix(
            (np.array(vals), (np.array(rows), np.array(cols))),
            shape=(dim_full, self.dim),
        )


def momentum_basis(N: int, d: int, k: int) -> MomentumSector:
    """Symmetry-adapted basis for momentum index k (p = 2 pi k / N)."""
    if not (isinstance(k, (int, np.integer)) and 0 <= k < N):
        raise ValueError(f"momentum index {k} not on the {N}-point grid")
    rep, _, period = orbit_table(N, d)
    s = np.arange(d ** N, dtype=np.int64)
    is_rep = rep == s
    compatible = (k * period) % N == 0
    reps = s[is_rep & compatible]
    return MomentumSector(N, d, int(k), reps, period[reps])


def sector_hamiltonian(H: LocalHamiltonian, sector: MomentumSector) -> np.ndarray:
    """Dense Hermitian block of the Hamiltonian in the sector basis."""
    Hs = _model_sparse(H)
    B = sector.basis_matrix()
    M = (B.getH() @ (Hs @ B)).toarray()
    return 0.5 * (M + M.conj().T)


def sector_hamiltonian_sparse(H: LocalHamiltonian, sector: MomentumSector) -> sp.csr_matrix:
    Hs = _model_sparse(H)
    B = sector.basis_matrix()
    M = (B.getH() @ (Hs @ B)).tocsr()
    return (M + M.getH()) * 0.5


_sparse_cache: dict[tuple, sp.csr_matrix] = {}


def _model_sparse(H: LocalHamiltonian) -> sp.csr_matrix:
    key = (H.name, H.d, H.N, tuple(sorted(H.params.items())))
    if key not in _sparse_cache:
        if len(_sparse_cache) > 4:
            _sparse_cache.clear()
        _sparse_cache[key] = H.sparse()
    return _sparse_cache[key]


@dataclass
class EigenSector:
    """Eigenpairs of one momentum sector, energies shifted by E0."""

    sector: MomentumSector
    energies: np.ndarray        # ascending, ground energy subtracted
    vectors: np.ndarray         # columns, in the sector basis
    full: bool                  # complete spectrum or only the lowest part

    @property
    def k(self) -> int:
        return self.sector.k

    @property
    def p(self) -> float:
        return self.sector.p

    def isolation_gap(self, alpha: int) -> float:
        """Minimal distance of E_alpha to the other in-sector eigenvalues."""
        e = self.energies
        others = np.delete(e, alpha)
        if others.size == 0:
            return math.inf
        return float(np.min(np.abs(others - e[alpha])))


def eigensolve(
    matrix,
    mode: str = "full",
    k: int = 6,
    sector: MomentumSector | None = None,
    shift: float = 0.0,
) -> EigenSector:
    """Diagonalize a sector matrix.

    mode='full' uses a dense solver and returns the complete spectrum;
    mode='lowest_k' runs Lanczos for the k lowest eigenpairs.
    """
    if mode == "full":
        M = matrix.toarray() if sp.issparse(matrix) else np.asarray(matrix)
        w, v = np.linalg.eigh(M)
        return EigenSector(sector, w - shift, v, True)
    if mode == "lowest_k":
        n = matrix.shape[0]
        if k >= n - 1:
            return eigensolve(matrix, "full", sector=sector, shift=shift)
        try:
            w, v = spla.eigsh(matrix, k=k, which="SA")
        except spla.ArpackNoConvergence as err:  # report residual, don't hide
            raise RuntimeError(f"Lanczos did not converge: {err}") from err
        order = np.argsort(w)
        return EigenSector(sector, w[order] - shift, v[:, order], False)
    raise ValueError(f"unknown mode {mode!r}")


def ground_state(H: LocalHamiltonian, lowest_k: int = 4):
    """(E0, full-space ground vector, its momentum index).

    Searches every sector; for gapped chains the ground state is the
    translation invariant (k=0) one.
    """
    best = None
    for k in range(H.N):
        sec = momentum_basis(H.N, H.d, k)
        if sec.dim == 0:
            continue
        M = sector_hamiltonian_sparse(H, sec)
        es = eigensolve(M, "lowest_k" if M.shape[0] > 400 else "full",
                        k=min(lowest_k, max(1, M.shape[0] - 2)), sector=sec)
        if best is None or es.energies[0] < best[0]:
            best = (float(es.energies[0]), sec, es.vectors[:, 0])
    E0, sec, vec = best
    psi0 = sec.basis_matrix() @ vec
    return E0, np.asarray(psi0).ravel(), sec.k


# ---------------------------------------------------------------------------
# operators with support

@dataclass
class RegionOperator:
    """Dense operator supported on a region (legs in ascending site order)."""

    region: Region
    matrix: np.ndarray
    label: str = ""

    def __post_init__(self):
        want = None
        # infer d from matrix size
        n = self.matrix.shape[0]
        k = self.region.size
        d = round(n ** (1.0 / k))
        if d ** k != n or self.matrix.shape != (n, n):
            raise ValueError("matrix dimension incompatible with region size")
        self.d = d

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.matrix, 2))

    def embedded(self) -> sp.csr_matrix:
        return embed_operator(sp.csr_matrix(self.matrix), self.region, self.d)

    def subtract_ground(self, psi0: np.ndarray) -> "RegionOperator":
        """Subtract <psi0|O|psi0> times the identity."""
        val = complex(np.vdot(psi0, self.embedded() @ psi0))
        mat = self.matrix - val * np.eye(self.matrix.shape[0])
        return RegionOperator(self.region, mat, self.label)


def translate_vector(psi: np.ndarray, x: int, N: int, d: int) -> np.ndarray:
    """Apply T^x to a full-space vector."""
    tau = translation_table(N, d)
    out = psi
    for _ in range(x % N):
        nxt = np.empty_like(out)
        nxt[tau] = out
        out = nxt
    return out


def momentum_state(
    Ov: np.ndarray | RegionOperator,
    k: int,
    psi0: np.ndarray,
    sector: MomentumSector,
) -> np.ndarray:
    """|Phi_p[O]> = N^{-1/2} sum_x e^{ipx} T_x O T_x^dag |psi0>, in sector coords.

    ``Ov`` may be a RegionOperator or the precomputed vector O|psi0>.
    Requires a translation invariant ground state, so T_x^dag |psi0> = c |psi0|>
    and the sum reduces to translations of O|psi0>.
    """
    N, d = sector.N, sector.d
    if isinstance(Ov, RegionOperator):
        v = Ov.embedded() @ psi0
    else:
        v = np.asarray(Ov)
    tau = translation_table(N, d)
    p = sector.p
    acc = np.zeros(v.shape, dtype=complex)
    cur = v.astype(complex)
    for x in range(N):
        acc += np.exp(1j * p * x) * cur
        nxt = np.empty_like(cur)
        nxt[tau] = cur
        cur = nxt
    acc /= math.sqrt(N)
    B = sector.basis_matrix()
    return np.asarray(B.getH() @ acc).ravel()


def norm_bound_check(
    O: RegionOperator,
    k: int,
    psi0: np.ndarray,
    sector: MomentumSector,
    delta: float,
) -> tuple[float, float]:
    """Clustering norm bound: ||Phi_p[O_X]|| <= sqrt(diam X + |X|/delta) ||O||."""
    phi = momentum_state(O, k, psi0, sector)
    lhs = float(np.linalg.norm(phi))
    rhs = math.sqrt(O.region.diam + O.region.size / delta) * O.norm
    return lhs, rhs


def partial_trace_localize(O_full: np.ndarray, region: Region, d: int) -> RegionOperator:
    """Normalized partial trace onto ``region`` (must be a periodic interval).

    Returns Tr_{complement} O / d^{|complement|} as a RegionOperator with
    legs in ascending site order; maps identity to identity.
    """
    if not region.is_contiguous():
        raise ValueError("region is not contiguous under the periodic metric")
    N = region.N
    start, length = region.as_interval()
    interval = [(start + j) % N for j in range(length)]
    rest = [s for s in range(N) if s not in set(interval)]
    order = interval + rest
    perm = _basis_permutation(order, N, d)
    dk = d ** length
    dr = d ** (N - length)
    M = O_full[np.ix_(perm, perm)].reshape(dk, dr, dk, dr)
    traced = np.trace(M, axis1=1, axis2=3) / dr
    # reorder legs from interval order to ascending site order
    asc = sorted(interval)
    leg_perm = [interval.index(s) for s in asc]
    traced = _permute_legs(traced, leg_perm, d)
    return RegionOperator(Region(tuple(asc), N), traced)


def _basis_permutation(site_order: list[int], N: int, d: int) -> np.ndarray:
    """perm[new_index] = old_index for reordering sites into ``site_order``."""
    dim = d ** N
    idx = np.arange(dim, dtype=np.int64)
    digits = np.empty((N, dim), dtype=np.int64)
    q = idx.copy()
    for s in range(N - 1, -1, -1):
        digits[s] = q % d
        q //= d
    out = np.zeros(dim, dtype=np.int64)
    for j, s in enumerate(site_order):
        out = out * d + digits[s]
    # out[old_index] = new_index; invert
    perm = np.empty(dim, dtype=np.int64)
    perm[out] = idx
    return perm


def _permute_legs(M: np.ndarray, leg_perm: list[int], d: int) -> np.ndarray:
    k = len(leg_perm)
    if leg_perm == list(range(k)):
        return M
    T = M.reshape((d,) * (2 * k))
    axes = leg_perm + [k + j for j in leg_perm]
    return T.transpose(axes).reshape(d ** k, d ** k)


def lr_commutator_check(
    A: RegionOperator,
    B: RegionOperator,
    t: float,
    H: LocalHamiltonian,
    mu: float,
    s: float,
) -> tuple[float, float]:
    """||[A(t), B]|| against the Lieb-Robinson envelope.

    rhs = 2 ||A|| ||B|| |X| exp(-mu dist(X,Y)) (exp(2 s |t|) - 1).
    """
    if A.region.dist(B.region) == 0:
        raise ValueError("supports overlap")
    Hd = _model_sparse(H).toarray()
    w, U = np.linalg.eigh(Hd)
    Ae = A.embedded().toarray().astype(complex)
    Be = B.embedded().toarray().astype(complex)
    phase = np.exp(1j * w * t)
    Aeig = U.conj().T @ Ae @ U
    At = U @ (phase[:, None] * Aeig * phase.conj()[None, :]) @ U.conj().T
    comm = At @ Be - Be @ At
    lhs = float(np.linalg.norm(comm, 2))
    rhs = (
        2.0 * A.norm * B.norm * A.region.size
        * math.exp(-mu * A.region.dist(B.region))
        * (math.exp(2.0 * s * abs(t)) - 1.0)
    )
    return lhs, rhs


def dense_spectrum_union_check(H: LocalHamiltonian) -> tuple[np.ndarray, np.ndarray]:
    """(sorted union of sector spectra, dense spectrum) for small chains."""
    ws = []
    for k in range(H.N):
        sec = momentum_basis(H.N, H.d, k)
        if sec.dim:
            ws.append(np.linalg.eigvalsh(sector_hamiltonian(H, sec)))
    union = np.sort(np.concatenate(ws))
    dense = np.linalg.eigvalsh(H.dense())
    return union, dense
