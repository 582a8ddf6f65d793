"""Uniform matrix-product tensors, transfer operators, and fixed points.

Conventions
-----------
A site tensor ``A`` has shape ``(D, d, D)`` with legs ``(left bond, physical,
right bond)``.  A bond-pair operator (transfer-type matrix) acts on vectorised
``D x D`` matrices ``vec(rho) = rho.reshape(-1)`` (row-major), so that

    E @ vec(rho) = vec(sum_s A[:, s, :] @ rho @ A[:, s, :].conj().T).

Left environments are row vectors: ``vec(l).conj() @ E`` carries a bra-side
environment one site to the right.  The mixed transfer with a physical operator
insertion is

    T_op[(x, y), (x', y')] = sum_{S, T} op[T, S] ket[x, S, x'] bra[y, T, y']*,

i.e. the first factor of the Kronecker pair is the ket layer and the second the
(conjugated) bra layer.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np


def transfer_matrix(A: np.ndarray, B: np.ndarray | None = None) -> np.ndarray:
    """Mixed transfer matrix sum_s kron(A[:, s, :], B[:, s, :].conj()).

    With ``B is None`` this is the ordinary transfer matrix of ``A``.
    """
    if B is None:
        B = A
    E = np.einsum("xsz,ysw->xyzw", A, B.conj())
    return E.reshape(A.shape[0] * B.shape[0], A.shape[2] * B.shape[2])


def mixed_transfer(ket: np.ndarray, bra: np.ndarray, op: np.ndarray) -> np.ndarray:
    """Transfer matrix of a ket/bra block pair with a physical operator insert.

    ``ket`` and ``bra`` are block tensors of shape ``(D, d**n, D)`` and ``op``
    is a ``d**n x d**n`` matrix acting on the block's physical space.
    """
    M = np.einsum("TS,xSz,yTw->xyzw", op, ket, bra.conj())
    return M.reshape(ket.shape[0] * bra.shape[0], ket.shape[2] * bra.shape[2])


def block_tensor_product(A: np.ndarray, n: int) -> np.ndarray:
    """Contract ``n`` copies of a site tensor into one block of shape (D, d**n, D)."""
    if n < 0:
        raise ValueError("block length must be nonnegative")
    D, d, _ = A.shape
    out = np.eye(D, dtype=A.dtype).reshape(D, 1, D)
    for _ in range(n):
        out = np.einsum("xSc,csz->xSsz", out, A).reshape(D, -1, D)
    return out


def transfer_fixed_points(A: np.ndarray, tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Left and right fixed-point density matrices (l, r) of the transfer matrix.

    Both are Hermitian positive semidefinite and normalised so that
    ``vec(l).conj() @ vec(r) == 1``.  ``r`` has unit Frobenius norm.  Requires
    an injective tensor (nondegenerate dominant transfer eigenvalue).
    """
    D = A.shape[0]
    E = transfer_matrix(A)
    evals, vr = np.linalg.eig(E)
    order = np.argsort(-np.abs(evals))
    lam0 = evals[order[0]]
    if len(evals) > 1 and abs(abs(evals[order[1]]) - abs(lam0)) < tol:
        raise ValueError("degenerate dominant transfer eigenvalue: tensor not injective")
    if abs(lam0 - 1.0) > 1e-8:
        raise ValueError(f"tensor is not normalised: dominant eigenvalue {lam0}")

    def _density(vec: np.ndarray) -> np.ndarray:
        m = vec.reshape(D, D)
        m = 0.5 * (m + m.conj().T)
        if np.abs(m.imag).max() < 1e-14 * max(np.abs(m.real).max(), 1.0):
            m = m.real.copy()
        if m.trace().real < 0:
            m = -m
        w = np.linalg.eigvalsh(m)
        if w.min() < -1e-10 * max(abs(w.max()), 1.0):
            raise ValueError("fixed point is not positive semidefinite")
        return m

    r = _density(vr[:, order[0]])
    _, vl = np.linalg.eig(E.conj().T)
    evals_l = np.einsum("ij,jk,ki->i", vl.conj().T, E, vl) / np.einsum(
        "ij,ji->i", vl.conj().T, vl
    )
    il = int(np.argmin(np.abs(evals_l - lam0)))
    l = _density(vl[:, il])
    r = r / np.linalg.norm(r)
    l = l / np.vdot(l.reshape(-1), r.reshape(-1)).real
    return l, r


def deleted_transfer(E: np.ndarray, l: np.ndarray, r: np.ndarray) -> np.ndarray:
    """Transfer matrix with the dominant rank-1 part removed: E - |r)(l|."""
    return E - np.outer(r.reshape(-1), l.reshape(-1).conj())


def regularized_resolvent_apply(
    E: np.ndarray,
    p: float,
    l: np.ndarray,
    r: np.ndarray,
    b: np.ndarray,
) -> np.ndarray:
    """Solve (1 - e^{ip} Etilde) x = P b in bond-pair space.

    ``Etilde`` is the transfer matrix with its dominant rank-1 part deleted and
    ``P = 1 - |r)(l|`` projects out that part of the source.  The solution is
    the geometric sum sum_{n>=0} e^{ipn} Etilde^n (P b), convergent for any
    momentum because the deleted transfer has spectral radius below one.
    """
    lv = l.reshape(-1).conj()
    rv = r.reshape(-1)
    Pb = b - rv * (lv @ b)
    Et = deleted_transfer(E, l, r)
    M = np.eye(E.shape[0], dtype=complex) - np.exp(1j * p) * Et
    return np.linalg.solve(M, Pb)


def aklt_tensor() -> np.ndarray:
    """Normalised uniform tensor of the spin-1 valence-bond ground state.

    Physical basis order is m = +1, 0, -1.  The transfer spectrum is
    {1, -1/3, -1/3, -1/3} and both fixed points are I/sqrt(2).
    """
    sp = np.array([[0.0, 1.0], [0.0, 0.0]])
    sm = sp.T
    sz = np.diag([1.0, -1.0])
    A = np.zeros((2, 3, 2))
    A[:, 0, :] = np.sqrt(2.0 / 3.0) * sp
    A[:, 1, :] = -np.sqrt(1.0 / 3.0) * sz
    A[:, 2, :] = -np.sqrt(2.0 / 3.0) * sm
    return A


@dataclass(frozen=True)
class MPSTensor:
    """A uniform injective site tensor together with its derived environments."""

    A: np.ndarray

    def __post_init__(self):
        if self.A.ndim != 3 or self.A.shape[0] != self.A.shape[2]:
            raise ValueError("site tensor must have shape (D, d, D)")

    @property
    def D(self) -> int:
        return self.A.shape[0]

    @property
    def d(self) -> int:
        return self.A.shape[1]

    @cached_property
    def E(self) -> np.ndarray:
        return transfer_matrix(self.A)

    @cached_property
    def fixed_points(self) -> tuple[np.ndarray, np.ndarray]:
        return transfer_fixed_points(self.A)

    @property
    def l(self) -> np.ndarray:
        return self.fixed_points[0]

    @property
    def r(self) -> np.ndarray:
        return self.fixed_points[1]

    def block(self, n: int) -> np.ndarray:
        return block_tensor_product(self.A, n)

    def correlation_length(self) -> float:
        evals = np.sort(np.abs(np.linalg.eigvals(self.E)))[::-1]
        lam2 = evals[1]
        if lam2 <= 0:
            return 0.0
        return -1.0 / np.log(lam2)
