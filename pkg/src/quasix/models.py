"""Translation-invariant local Hamiltonians on periodic chains.

Models: AKLT (spin-1, nearest-neighbour total-spin-2 projectors), transverse
field Ising, spin-1 Heisenberg.  A model carries its generating local terms;
the full Hamiltonian is the sum of all translates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
from scipy.optimize import minimize_scalar

from .lattice import Region

# Pauli matrices
SX = np.array([[0.0, 1.0], [1.0, 0.0]])
SY = np.array([[0.0, -1.0j], [1.0j, 0.0]])
SZ = np.array([[1.0, 0.0], [0.0, -1.0]])

# spin-1 operators in the basis (m=+1, m=0, m=-1)
S1Z = np.diag([1.0, 0.0, -1.0])
S1P = math.sqrt(2.0) * np.diag([1.0, 1.0], k=1)  # S+
S1M = S1P.T
S1X = 0.5 * (S1P + S1M)
S1Y = -0.5j * (S1P - S1M)


def spin1_exchange() -> np.ndarray:
    """S_i . S_j on a spin-1 pair (9x9, real)."""
    return (
        np.kron(S1X, S1X) + np.kron(S1Y, S1Y).real + np.kron(S1Z, S1Z)
    )


def aklt_projector() -> np.ndarray:
    """Projector onto total spin 2 of a spin-1 pair.

    P = (T+1)(T+2)/6 with T = S_i . S_j, which has eigenvalues -2, -1, 1 on
    the S=0,1,2 multiplets.
    """
    T = spin1_exchange()
    return (T + np.eye(9)) @ (T + 2.0 * np.eye(9)) / 6.0


def operator_norm(M: np.ndarray) -> float:
    return float(np.linalg.norm(M, 2))


@dataclass
class LocalHamiltonian:
    """Sum of all lattice translates of a few generating local terms.

    Each generator is a (Region, matrix) pair; the full Hamiltonian is
    sum_x T_x H_X T_x^dag over all x in Z_N.
    """

    name: str
    d: int
    N: int
    generators: list[tuple[Region, np.ndarray]] = field(default_factory=list)
    params: dict = field(default_factory=dict)

    def __post_init__(self):
        for region, mat in self.generators:
            if mat.shape != (self.d ** region.size,) * 2:
                raise ValueError("term dimension does not match region size")
            if not np.allclose(mat, mat.conj().T, atol=1e-12):
                raise ValueError("local term is not Hermitian")

    def terms(self) -> list[tuple[Region, np.ndarray]]:
        """All translated terms (Region, matrix)."""
        out = []
        for region, mat in self.generators:
            for x in range(self.N):
                out.append((region.shift(x), mat))
        return out

    def sparse(self) -> sp.csr_matrix:
        """Full Hamiltonian as a sparse matrix in the product basis.

        Site 0 is the slowest (most significant) base-d digit of the basis
        index.
        """
        dim = self.d ** self.N
        H = sp.csr_matrix((dim, dim))
        for region, mat in self.terms():
            H = H + embed_operator(sp.csr_matrix(mat), region, self.d)
        H = (H + H.getH()) * 0.5
        return H.tocsr()

    def dense(self) -> np.ndarray:
        return self.sparse().toarray()


def _site_weights(d: int, N: int, sites: tuple[int, ...]) -> np.ndarray:
    return np.array([d ** (N - 1 - s) for s in sites], dtype=np.int64)


def embed_operator(op, region: Region, d: int):
    """Embed an operator on ``region`` into the full chain (sparse).

    The operator's tensor legs are ordered like ``region.sites`` (ascending
    site index).
    """
    op = sp.coo_matrix(op)
    N = region.N
    sites = region.sites
    k = len(sites)
    rest = [s for s in range(N) if s not in sites]
    wr = _site_weights(d, N, sites)
    wrest = _site_weights(d, N, tuple(rest))
    # indices of all configurations of the complement
    m = len(rest)
    if m:
        digs = np.stack(
            np.meshgrid(*([np.arange(d)] * m), indexing="ij"), axis=-1
        ).reshape(-1, m)
        base = digs @ wrest
    else:
        base = np.zeros(1, dtype=np.int64)

    def local_to_digits(idx):
        digs = np.empty((idx.size, k), dtype=np.int64)
        q = idx.copy()
        for j in range(k - 1, -1, -1):
            digs[:, j] = q % d
            q //= d
        return digs

    rows_l = local_to_digits(op.row) @ wr
    cols_l = local_to_digits(op.col) @ wr
    rows = (rows_l[:, None] + base[None, :]).ravel()
    cols = (cols_l[:, None] + base[None, :]).ravel()
    data = np.repeat(op.data, base.size)
    dim = d ** N
    return sp.coo_matrix((data, (rows, cols)), shape=(dim, dim)).tocsr()


def build_model(name: str, params: dict | None = None, N: int = 8) -> LocalHamiltonian:
    """Construct one of the named chain models.

    AKLT: sum of spin-2 projectors on neighbouring spin-1 pairs (d=3).
    TFIM: -sum sz.sz - g sum sx (d=2), g > 0 unless g=0 (classical Ising).
    Heisenberg: sum S_i . S_{i+1} on spin-1 sites (d=3).
    """
    params = dict(params or {})
    if N < 3:
        raise ValueError("need at least 3 sites")
    name = name.lower()
    if name == "aklt":
        gen = [(Region((0, 1), N), aklt_projector())]
        return LocalHamiltonian("aklt", 3, N, gen, params)
    if name == "tfim":
        g = float(params.get("g", 1.0))
        if g < 0:
            raise ValueError("field g must be >= 0")
        bond = -np.kron(SZ, SZ)
        site = -g * SX
        gen = [(Region((0, 1), N), bond), (Region((0,), N), site)]
        return LocalHamiltonian("tfim", 2, N, gen, {"g": g})
    if name == "heisenberg":
        J = float(params.get("J", 1.0))
        gen = [(Region((0, 1), N), J * spin1_exchange())]
        return LocalHamiltonian("heisenberg", 3, N, gen, {"J": J})
    raise ValueError(f"unknown model {name!r}")


@dataclass(frozen=True)
class LRConstants:
    """Lieb-Robinson data (mu, s, v_LR) for a local Hamiltonian."""

    mu: float
    s: float
    v_lr: float | None = None
    c: float = 1.0


def lr_constants(H: LocalHamiltonian, mu: float) -> float:
    """s(mu) = max_x sum_{X ni x} ||H_X|| |X| exp(mu diam X)."""
    if mu <= 0:
        raise ValueError("mu must be positive")
    per_site = np.zeros(H.N)
    for region, mat in H.terms():
        w = operator_norm(mat) * region.size * math.exp(mu * region.diam)
        for s in region.sites:
            per_site[s] += w
    return float(per_site.max())


def lr_velocity(dE: float, s: float, mu: float) -> float:
    """v_LR = (dE/2 + 2 s) / mu."""
    if dE < 0 or s <= 0 or mu <= 0:
        raise ValueError("inputs must be positive")
    return (0.5 * dE + 2.0 * s) / mu


def optimal_mu(H: LocalHamiltonian, dE: float, bracket=(1e-3, 8.0)) -> float:
    """The mu minimizing v_LR(mu) = (dE/2 + 2 s(mu)) / mu.

    mu is a free parameter of the LR condition; the schedule is tightest for
    the smallest velocity.
    """
    res = minimize_scalar(
        lambda m: lr_velocity(dE, lr_constants(H, m), m),
        bounds=bracket,
        method="bounded",
        options={"xatol": 1e-6},
    )
    return float(res.x)
