"""Effective norm and Hamiltonian matrices for momentum superpositions of blocks.

A trial excitation is ``|chi_p(B)> = sum_n e^{ipn} T^n |Psi(B)>`` where
``|Psi(B)>`` is the uniform ground state with the tensors on ``ell``
consecutive sites replaced by a block tensor ``B`` of shape ``(D, d**ell, D)``.
This module assembles, directly in the thermodynamic limit, the quadratic forms

    N(p)[B, B'] = <chi_p(B)|chi_p(B')> / N_sites
    H(p)[B, B'] = <chi_p(B)|(H - E0)|chi_p(B')> / N_sites

as ``K x K`` matrices over flattened blocks (``K = D**2 d**ell``).  Relative
displacements between bra and ket blocks, and the position of each two-site
interaction term, are summed explicitly inside a finite window; everything
beyond the window is captured by transfer fixed points, dressed boundary
environments, and geometric (resolvent) sums of the transfer matrix with its
dominant rank-1 part deleted.  The rank-1 deletions are exact on the subspace
of blocks with vanishing ground-state overlap, which is enforced by a gauge
projection ``G`` (see :func:`gauge_fix_map`); at momentum zero the same
projection enforces orthogonality to the ground state.

The interaction must be a two-site term with zero ground-state energy density;
the assembler subtracts the density automatically.
"""

from __future__ import annotations

import numpy as np

from .tensors import (
    block_tensor_product,
    deleted_transfer,
    mixed_transfer,
    transfer_fixed_points,
    transfer_matrix,
)

__all__ = [
    "ExcitationAnsatz",
    "effective_norm_matrix",
    "effective_hamiltonian_matrix",
    "ground_overlap_functional",
    "gauge_fix_map",
]


# ---------------------------------------------------------------------------
# window contraction engine
#
# An environment tensor is swept left to right across a window of sites.  Axes
# are tracked by tags:
#   ("kb",) / ("bb",)  current ket / bra bond
#   ("a",), ("b",)     bra-block left / right bond (kernel row indices)
#   ("c",), ("d",)     ket-block left / right bond (kernel column indices)
#   ("bp", i)          bra physical leg at site i (kernel row index)
#   ("kp", i)          ket physical leg at site i (kernel column index)
#   ("hs", i)/("ht", i) pending ket-out / bra-in physical legs of an
#                      interaction insertion
#   ("x0",)/("y0",)    incoming bond pair of a right boundary composite
# Sites where both layers are open block slots share one physical index
# (a Kronecker delta in the kernel); those are recorded in ``shared`` and
# expanded only at packaging time.
# ---------------------------------------------------------------------------


def _contract(env, tags, T, pairs, rest):
    """Tensordot ``env`` with ``T`` pairing tagged env axes with T axes."""
    ei = [tags.index(t) for t, _ in pairs]
    ti = [ax for _, ax in pairs]
    out = np.tensordot(env, T, axes=(ei, ti))
    drop = set(ei)
    keep = [t for ix, t in enumerate(tags) if ix not in drop]
    return out, keep + list(rest)


def _sweep(A, env, tags, win_lo, win_hi, bra_blob, ket_blob,
           h4=None, hpos=None, rcap=None):
    """Contract one window; returns (env, tags, shared delta sites)."""
    Ac = A.conj()
    tags = list(tags)
    shared: list[int] = []

    def in_blob(rng, i):
        return rng is not None and rng[0] <= i < rng[1]

    def ket_layer(env, tags, i, stag):
        pairs, rest = [], []
        if ket_blob is not None and i == ket_blob[1]:
            rest.append(("d",))          # layer resumes: left bond is free
        else:
            pairs.append((("kb",), 0))
        return _contract(env, tags, A, pairs, rest + [stag, ("kb",)])

    def bra_layer(env, tags, i, mode, tag):
        pairs, rest = [], []
        if bra_blob is not None and i == bra_blob[1]:
            rest.append(("b",))
        else:
            pairs.append((("bb",), 0))
        if mode == "pair":
            pairs.append((tag, 1))
            return _contract(env, tags, Ac, pairs, rest + [("bb",)])
        return _contract(env, tags, Ac, pairs, rest + [tag, ("bb",)])

    i = win_lo
    while i <= win_hi:
        h_here = h4 is not None and i == hpos
        sites = (i, i + 1) if h_here else (i,)

        for s in sites:
            if ket_blob is not None and s == ket_blob[0] and ("kb",) in tags:
                tags[tags.index(("kb",))] = ("c",)
            if not in_blob(ket_blob, s):
                stag = ("hs", s) if h_here else ("s", s)
                env, tags = ket_layer(env, tags, s, stag)

        if h_here:
            pairs = [(("hs", s), ax) for ax, s in ((2, sites[0]), (3, sites[1]))
                     if ("hs", s) in tags]
            taken = {ax for _, ax in pairs}
            rest = []
            for ax in range(4):
                if ax in taken:
                    continue
                s = sites[ax % 2]
                if ax < 2:
                    rest.append(("bp", s) if in_blob(bra_blob, s) else ("ht", s))
                else:
                    rest.append(("kp", s))
            env, tags = _contract(env, tags, h4, pairs, rest)

        for s in sites:
            if bra_blob is not None and s == bra_blob[0] and ("bb",) in tags:
                tags[tags.index(("bb",))] = ("a",)
            kB, bB = in_blob(ket_blob, s), in_blob(bra_blob, s)
            if h_here:
                if not bB:
                    env, tags = bra_layer(env, tags, s, "pair", ("ht", s))
            elif not bB and not kB:
                env, tags = bra_layer(env, tags, s, "pair", ("s", s))
            elif not bB and kB:
                env, tags = bra_layer(env, tags, s, "open", ("kp", s))
            elif bB and not kB:
                tags[tags.index(("s", s))] = ("bp", s)
            else:
                shared.append(s)

        i += 2 if h_here else 1

    if rcap is not None:
        kb_in, bb_in = ("kb",) in tags, ("bb",) in tags
        if kb_in and bb_in:
            env, tags = _contract(env, tags, rcap,
                                  [(("kb",), 0), (("bb",), 1)], [])
        elif bb_in:
            env, tags = _contract(env, tags, rcap, [(("bb",), 1)], [("d",)])
        elif kb_in:
            env, tags = _contract(env, tags, rcap, [(("kb",), 0)], [("b",)])
        else:
            env, tags = _contract(env, tags, rcap, [], [("d",), ("b",)])
    return env, tags, shared


def _package_kernel(env, tags, shared, ell, k, d, D):
    tags = list(tags)
    for i in shared:
        env = np.multiply.outer(env, np.eye(d, dtype=env.dtype))
        tags += [("bp", i), ("kp", i)]
    row = [("a",)] + [("bp", i) for i in range(ell)] + [("b",)]
    col = [("c",)] + [("kp", k + i) for i in range(ell)] + [("d",)]
    perm = [tags.index(t) for t in row + col]
    K = D * d**ell * D
    return np.ascontiguousarray(env.transpose(perm)).reshape(K, K)


def _kernel(A, lcap, rcap, ell, k, h4=None, hpos=None):
    """K x K window kernel for bra block at 0, ket block at k >= 0."""
    D, d = A.shape[0], A.shape[1]
    win_lo, win_hi = 0, k + ell - 1
    if h4 is not None:
        win_lo, win_hi = min(win_lo, hpos), max(win_hi, hpos + 1)
    env, tags, shared = _sweep(A, lcap, [("kb",), ("bb",)], win_lo, win_hi,
                               (0, ell), (k, k + ell), h4, hpos, rcap)
    return _package_kernel(env, tags, shared, ell, k, d, D)


def _left_composite(A, lcap, ell, h4=None, hpos=None):
    """(K x D^2) boundary composite: bra block at 0, open bond pair to the right."""
    D, d = A.shape[0], A.shape[1]
    win_lo, win_hi = 0, ell - 1
    if h4 is not None:
        win_lo, win_hi = min(win_lo, hpos), max(win_hi, hpos + 1)
    env, tags, _ = _sweep(A, lcap, [("kb",), ("bb",)], win_lo, win_hi,
                          (0, ell), None, h4, hpos, None)
    K = D * d**ell * D
    if ("bb",) in tags:  # bra layer resumed inside the window
        order = ([("a",)] + [("bp", i) for i in range(ell)]
                 + [("b",), ("kb",), ("bb",)])
        return np.ascontiguousarray(
            env.transpose([tags.index(t) for t in order])).reshape(K, D * D)
    order = [("a",)] + [("bp", i) for i in range(ell)] + [("kb",)]
    arr = np.ascontiguousarray(
        env.transpose([tags.index(t) for t in order])).reshape(D, d**ell, D)
    out = np.zeros((D, d**ell, D, D, D), dtype=arr.dtype)
    for b in range(D):
        out[:, :, b, :, b] = arr
    return out.reshape(K, D * D)


def _right_composite(A, rcap, ell, h4=None, hpos=None):
    """(D^2 x K) boundary composite: open bond pair on the left, ket block at 0."""
    D, d = A.shape[0], A.shape[1]
    win_lo, win_hi = 0, ell - 1
    if h4 is not None:
        win_lo, win_hi = min(win_lo, hpos), max(win_hi, hpos + 1)
    if win_lo < 0:
        env = np.einsum("ab,cd->abcd", np.eye(D), np.eye(D))
        tags = [("x0",), ("kb",), ("y0",), ("bb",)]
    else:
        env = np.eye(D)
        tags = [("y0",), ("bb",)]
    env, tags, _ = _sweep(A, env, tags, win_lo, win_hi,
                          None, (0, ell), h4, hpos, rcap)
    K = D * d**ell * D
    if ("x0",) in tags:
        order = ([("x0",), ("y0",), ("c",)]
                 + [("kp", i) for i in range(ell)] + [("d",)])
        return np.ascontiguousarray(
            env.transpose([tags.index(t) for t in order])).reshape(D * D, K)
    order = [("y0",)] + [("kp", i) for i in range(ell)] + [("d",)]
    arr = np.ascontiguousarray(
        env.transpose([tags.index(t) for t in order])).reshape(D, d**ell, D)
    out = np.zeros((D, D, D, d**ell, D), dtype=arr.dtype)
    for c in range(D):
        out[c, :, c, :, :] = arr
    return out.reshape(D * D, K)


# ---------------------------------------------------------------------------
# public assembly
# ---------------------------------------------------------------------------


def ground_overlap_functional(A: np.ndarray, ell: int,
                              l: np.ndarray | None = None,
                              r: np.ndarray | None = None) -> np.ndarray:
    """Coefficient vector of the per-site ground-state overlap functional.

    For a flattened block ``B``, ``o(B) = coef @ B.reshape(-1)`` is the density
    ``<chi_p(B)|ground>`` per momentum superposition term; the all-ground block
    has ``o == 1``.
    """
    if l is None or r is None:
        l, r = transfer_fixed_points(A)
    Ab = block_tensor_product(A, ell)
    coef = np.einsum("xy,ySw,zw->xSz", l.conj(), Ab.conj(), r)
    return coef.reshape(-1)


def gauge_fix_map(A: np.ndarray, ell: int,
                  l: np.ndarray | None = None,
                  r: np.ndarray | None = None) -> np.ndarray:
    """Projection ``G`` onto blocks with vanishing ground-state overlap.

    ``G(B) = B - o(B) * A_block`` is idempotent on the constraint subspace and
    preserves the physical excitation for every momentum (the subtracted
    direction changes the state by a multiple of the ground state at momentum
    zero and by a pure gauge transformation otherwise).
    """
    if l is None or r is None:
        l, r = transfer_fixed_points(A)
    Ab = block_tensor_product(A, ell).reshape(-1)
    coef = ground_overlap_functional(A, ell, l, r)
    out = -np.outer(Ab, coef)
    if np.iscomplexobj(out) and np.abs(out.imag).max() == 0.0:
        out = out.real.copy()
    out[np.diag_indices_from(out)] += 1.0
    return out


class ExcitationAnsatz:
    """Precomputed kernels for the effective matrices of a block excitation.

    Window kernels and boundary composites are momentum independent, so one
    instance supports fast evaluation of ``norm_matrix(p)`` and
    ``hamiltonian_matrix(p)`` over many momenta.

    Parameters
    ----------
    A : uniform injective site tensor, shape (D, d, D), normalised transfer.
    ell : block length (number of replaced sites).
    h : optional two-site interaction, shape (d*d, d*d), Hermitian.  Its
        ground-state energy density is subtracted automatically.
    """

    def __init__(self, A: np.ndarray, ell: int, h: np.ndarray | None = None):
        if ell < 1:
            raise ValueError("block length must be at least 1")
        self.A = np.asarray(A)
        self.ell = ell
        D, d = A.shape[0], A.shape[1]
        self.D, self.d = D, d
        self.K = D * d**ell * D
        self.l, self.r = transfer_fixed_points(A)
        self.E = transfer_matrix(A)
        self.Et = deleted_transfer(self.E, self.l, self.r)
        lcap = self.l.conj()
        rcap = self.r
        self.G = gauge_fix_map(A, ell, self.l, self.r)

        self._NK = [_kernel(A, lcap, rcap, ell, k) for k in range(ell)]
        self._L0 = _left_composite(A, lcap, ell)
        self._R0 = _right_composite(A, rcap, ell)

        self.h = None
        if h is not None:
            h = np.asarray(h)
            if np.iscomplexobj(h) and np.abs(h.imag).max() == 0.0:
                h = h.real  # keep kernels real for real inputs (halves memory)
            A2 = block_tensor_product(A, 2)
            Eh = mixed_transfer(A2, A2, h)
            e0 = (self.l.reshape(-1).conj() @ Eh @ self.r.reshape(-1)).real
            h = h - e0 * np.eye(d * d)
            self.h = h
            self.e0 = e0
            h4 = h.reshape(d, d, d, d)
            self.Eh = mixed_transfer(A2, A2, h)
            eye2 = np.eye(D * D)
            # h strictly outside the window: dressed boundary environments
            lh = np.linalg.solve((eye2 - self.Et).T,
                                 self.Eh.T @ self.l.reshape(-1).conj())
            rh = np.linalg.solve(eye2 - self.Et, self.Eh @ self.r.reshape(-1))
            lcap_h = lh.reshape(D, D)
            rcap_h = rh.reshape(D, D)
            # explicit kernels only where the blocks overlap (k < ell); all
            # larger displacements factorise through bond-pair space below
            self._HK = []
            for k in range(ell):
                tot = _kernel(A, lcap_h, rcap, ell, k)
                tot += _kernel(A, lcap, rcap_h, ell, k)
                for j in range(-1, k + ell):
                    tot += _kernel(A, lcap, rcap, ell, k, h4, j)
                self._HK.append(tot)
            # adjacent blocks with the interaction on the junction bond
            self._J = _kernel(A, lcap, rcap, ell, ell, h4, ell - 1)
            self._LH = _left_composite(A, lcap_h, ell)
            self._RH = _right_composite(A, rcap_h, ell)
            self._Lin = sum(_left_composite(A, lcap, ell, h4, j)
                            for j in range(-1, ell - 1))
            self._Rin = sum(_right_composite(A, rcap, ell, h4, j)
                            for j in range(0, ell))
            self._Ledge = _left_composite(A, lcap, ell, h4, ell - 1)
            self._Redge = _right_composite(A, rcap, ell, h4, -1)

    # -- momentum-dependent assembly ------------------------------------

    def _resolvent(self, p: float) -> np.ndarray:
        z = np.exp(1j * p)
        n2 = self.D * self.D
        return np.linalg.inv(np.eye(n2, dtype=complex) - z * self.Et)

    def norm_matrix(self, p: float, gauge_fixed: bool = True) -> np.ndarray:
        z = np.exp(1j * p)
        Rp = self._resolvent(p)
        M = np.zeros((self.K, self.K), dtype=complex)
        for k in range(1, self.ell):
            M += z**k * self._NK[k]
        M += z**self.ell * (self._L0 @ Rp @ self._R0)
        Nc = self._NK[0] + M + M.conj().T
        if gauge_fixed:
            Nc = self.G.conj().T @ Nc @ self.G
        return 0.5 * (Nc + Nc.conj().T)

    def hamiltonian_matrix(self, p: float, gauge_fixed: bool = True) -> np.ndarray:
        if self.h is None:
            raise ValueError("no interaction term was provided")
        z = np.exp(1j * p)
        Rp = self._resolvent(p)
        # all displacements k >= ell, resolved by interaction position:
        # left of the cut, right of the cut, on either junction bond, in the
        # middle stretch, or on the contact bond of exactly adjacent blocks
        tail = (self._LH + self._Lin) @ Rp @ self._R0
        tail = tail + self._L0 @ Rp @ (self._RH + self._Rin)
        tail = tail + z * (self._Ledge @ Rp @ self._R0)
        tail = tail + z * (self._L0 @ Rp @ self._Redge)
        tail = tail + (z * z) * (self._L0 @ (Rp @ self.Eh @ Rp) @ self._R0)
        tail = tail + self._J
        M = z**self.ell * tail
        for k in range(1, self.ell):
            M = M + z**k * self._HK[k]
        Hc = self._HK[0] + M + M.conj().T
        if gauge_fixed:
            Hc = self.G.conj().T @ Hc @ self.G
        return 0.5 * (Hc + Hc.conj().T)


def effective_norm_matrix(A: np.ndarray, p: float, ell: int,
                          gauge_fixed: bool = True) -> np.ndarray:
    """Per-site overlap form of momentum-``p`` block excitations, ``K x K``."""
    return ExcitationAnsatz(A, ell).norm_matrix(p, gauge_fixed)


def effective_hamiltonian_matrix(A: np.ndarray, h: np.ndarray, p: float,
                                 ell: int, gauge_fixed: bool = True) -> np.ndarray:
    """Per-site energy form (above the ground state) of block excitations."""
    return ExcitationAnsatz(A, ell, h).hamiltonian_matrix(p, gauge_fixed)
