"""Uniform-chain tensors, effective matrices, and excitation bands."""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from quasix.models import aklt_projector, build_model, S1Z
from quasix.sector import eigensolve, momentum_basis, sector_hamiltonian
from quasix.mps import (ExcitationAnsatz, MPSTensor, aklt_tensor,
                        block_tensor_product, continuum_edges,
                        dispersion_scan, excitation_energies, gauge_fix_map,
                        ground_overlap_functional, mixed_transfer,
                        regularized_resolvent_apply, transfer_fixed_points,
                        transfer_matrix)
from quasix.mps.tensors import deleted_transfer

from oracles import (aklt_single_mode_energy, aklt_structure_factor,
                     brute_force_h_element, brute_force_norm_element)


def random_mps(D, d, seed, complex_=True):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((D, d, D))
    if complex_:
        A = A + 1j * rng.standard_normal((D, d, D))
    E = transfer_matrix(A)
    rho = np.max(np.abs(np.linalg.eigvals(E)))
    return A / math.sqrt(rho)


# ---------------------------------------------------------------------------
# transfer structure


def test_aklt_transfer_spectrum():
    A = aklt_tensor()
    w = np.sort_complex(np.linalg.eigvals(transfer_matrix(A)))
    expect = np.sort_complex(np.array([1.0, -1 / 3, -1 / 3, -1 / 3]))
    assert np.allclose(w, expect, atol=1e-13)


def test_aklt_fixed_points_are_maximally_mixed():
    A = aklt_tensor()
    l, r = transfer_fixed_points(A)
    assert np.allclose(l, np.eye(2) / math.sqrt(2), atol=1e-13)
    assert np.allclose(r, np.eye(2) / math.sqrt(2), atol=1e-13)
    assert abs(np.vdot(l.reshape(-1), r.reshape(-1)) - 1.0) < 1e-13


def test_correlation_length_and_alternating_correlator():
    T = MPSTensor(aklt_tensor())
    assert abs(T.correlation_length() - 1.0 / math.log(3.0)) < 1e-12
    l, r = T.fixed_points
    M = mixed_transfer(T.A, T.A, S1Z).reshape(4, 4)
    E = T.E

    def corr(n):
        mid = np.linalg.matrix_power(E, n - 1)
        return (l.conj().reshape(-1) @ M @ mid @ M @ r.reshape(-1)).real

    for n in (2, 3, 4, 5):
        assert abs(corr(n + 1) / corr(n) + 1.0 / 3.0) < 1e-12


def test_mixed_transfer_reduces_to_transfer():
    A = random_mps(3, 2, 0)
    assert np.allclose(mixed_transfer(A, A, np.eye(2)).reshape(9, 9),
                       transfer_matrix(A), atol=1e-14)


def test_block_tensor_product_matches_explicit():
    A = random_mps(2, 3, 1)
    Ab = block_tensor_product(A, 2)
    expect = np.einsum("xsc,ctz->xstz", A, A).reshape(2, 9, 2)
    assert np.allclose(Ab, expect, atol=1e-14)


def test_transfer_power_splits_into_deleted_part_and_projector():
    A = aklt_tensor()
    E = transfer_matrix(A)
    l, r = transfer_fixed_points(A)
    Et = deleted_transfer(E, l, r)
    P = np.outer(r.reshape(-1), l.conj().reshape(-1))
    for m in (1, 2, 5, 9):
        assert np.allclose(np.linalg.matrix_power(E, m),
                           np.linalg.matrix_power(Et, m) + P, atol=1e-13)


def test_resolvent_against_power_series():
    A = random_mps(3, 2, 5)
    E = transfer_matrix(A)
    l, r = transfer_fixed_points(A)
    Et = deleted_transfer(E, l, r)
    rng = np.random.default_rng(9)
    b = rng.standard_normal(9) + 1j * rng.standard_normal(9)
    p = 0.7
    got = regularized_resolvent_apply(E, p, l, r, b)
    Pb = b - np.vdot(l.conj().reshape(-1).conj(), b) * r.reshape(-1)
    Pb = b - (l.conj().reshape(-1) @ b) * r.reshape(-1)
    series = np.zeros_like(b)
    term = Pb
    for m in range(200):
        series += term
        term = np.exp(1j * p) * (Et @ term)
    assert np.linalg.norm(got - series) < 1e-10


# ---------------------------------------------------------------------------
# gauge structure


def test_ground_block_has_unit_overlap():
    A = aklt_tensor()
    for ell in (1, 2, 3):
        coef = ground_overlap_functional(A, ell)
        Ab = block_tensor_product(A, ell).reshape(-1)
        assert abs(coef @ Ab - 1.0) < 1e-12


@settings(max_examples=10, deadline=None)
@given(seed=st.integers(0, 10 ** 6), D=st.integers(2, 3), d=st.integers(2, 3))
def test_gauge_map_projects_out_ground_direction(seed, D, d):
    A = random_mps(D, d, seed)
    ell = 2
    G = gauge_fix_map(A, ell)
    coef = ground_overlap_functional(A, ell)
    rng = np.random.default_rng(seed + 1)
    v = rng.standard_normal(G.shape[0]) + 1j * rng.standard_normal(G.shape[0])
    assert abs(coef @ (G @ v)) < 1e-10 * np.linalg.norm(v)
    assert np.linalg.norm(G @ G - G) < 1e-10  # idempotent


# ---------------------------------------------------------------------------
# effective matrices versus literal displacement sums


@pytest.mark.parametrize("ell,p", [(1, 0.7), (1, math.pi), (2, 0.7),
                                   (2, math.pi)])
def test_norm_matrix_matches_brute_force(ell, p):
    A = aklt_tensor()
    l, r = transfer_fixed_points(A)
    ans = ExcitationAnsatz(A, ell)
    N = ans.norm_matrix(p, gauge_fixed=False)
    G = gauge_fix_map(A, ell)
    rng = np.random.default_rng(17)
    K = N.shape[0]
    for trial in range(2):
        u = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
        v = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
        got = u.conj() @ N @ v
        want = brute_force_norm_element(
            A, l, r, u.reshape(2, 3 ** ell, 2), v.reshape(2, 3 ** ell, 2),
            ell, p, kmax=32)
        assert abs(got - want) < 1e-10


@pytest.mark.parametrize("ell,p", [(1, 0.7), (2, math.pi)])
def test_hamiltonian_matrix_matches_brute_force(ell, p):
    A = aklt_tensor()
    l, r = transfer_fixed_points(A)
    h = aklt_projector()
    ans = ExcitationAnsatz(A, ell, h)
    H = ans.hamiltonian_matrix(p, gauge_fixed=False)
    G = gauge_fix_map(A, ell)
    rng = np.random.default_rng(23)
    K = H.shape[0]
    u = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
    v = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
    got = u.conj() @ H @ v
    want = brute_force_h_element(
        A, l, r, h, u.reshape(2, 3 ** ell, 2), v.reshape(2, 3 ** ell, 2),
        ell, p, kmax=20, jpad=20)
    assert abs(got - want) < 1e-10


def test_effective_matrices_are_hermitian_and_norm_psd():
    A = aklt_tensor()
    h = aklt_projector()
    for ell in (1, 2):
        ans = ExcitationAnsatz(A, ell, h)
        for p in (0.0, 0.4 * math.pi, math.pi):
            N = ans.norm_matrix(p)
            H = ans.hamiltonian_matrix(p)
            assert np.linalg.norm(N - N.conj().T) < 1e-9
            assert np.linalg.norm(H - H.conj().T) < 1e-9
            assert np.linalg.eigvalsh(N).min() > -1e-10


def test_norm_matrix_rank_and_spectrum_at_pi():
    A = aklt_tensor()
    N = ExcitationAnsatz(A, 1).norm_matrix(math.pi)
    w = np.sort(np.linalg.eigvalsh(N))
    expect = np.array([0.0] * 4 + [0.5] * 5 + [1.5] * 3)
    assert np.allclose(w, expect, atol=1e-10)


# ---------------------------------------------------------------------------
# closed-form single-mode checks


def test_single_mode_norm_closed_form():
    """The spin-operator block reproduces the static structure factor."""
    A = aklt_tensor()
    ans = ExcitationAnsatz(A, 1)
    B = np.einsum("ts,xsz->xtz", S1Z, A).reshape(-1)
    for p in (0.3, 0.7 * math.pi, math.pi):
        N = ans.norm_matrix(p, gauge_fixed=False)
        got = (B.conj() @ N @ B).real
        assert abs(got - aklt_structure_factor(p)) < 1e-12


def test_single_mode_energy_closed_form():
    A = aklt_tensor()
    ans = ExcitationAnsatz(A, 1, aklt_projector())
    B = np.einsum("ts,xsz->xtz", S1Z, A).reshape(-1)
    for p in (0.3, 0.7 * math.pi, math.pi):
        N = ans.norm_matrix(p, gauge_fixed=False)
        H = ans.hamiltonian_matrix(p, gauge_fixed=False)
        got = (B.conj() @ H @ B).real / (B.conj() @ N @ B).real
        assert abs(got - aklt_single_mode_energy(p)) < 1e-12


# ---------------------------------------------------------------------------
# bands


def test_lowest_band_is_triplet_and_beats_single_mode():
    A = aklt_tensor()
    h = aklt_projector()
    vals = {}
    for ell in (1, 2, 3):
        ans = ExcitationAnsatz(A, ell, h)
        e, _ = excitation_energies(ans.norm_matrix(math.pi),
                                   ans.hamiltonian_matrix(math.pi))
        assert e[2] - e[0] < 1e-10  # exact threefold degeneracy
        assert e[3] - e[0] > 1e-3
        vals[ell] = e[0]
    assert abs(vals[1] - 10.0 / 27.0) < 1e-12  # single-mode value is exact
    assert vals[1] > vals[2] > vals[3]


def test_dispersion_scan_shapes():
    A = aklt_tensor()
    band = dispersion_scan(A, aklt_projector(), 1,
                           momenta=np.linspace(0, 2 * math.pi, 7))
    assert band.lowest.shape == (7,)
    tab = band.table(4)
    assert tab.shape == (7, 4)
    assert np.all(np.isfinite(band.lowest))


def test_small_ring_diagonalization_agrees_loosely():
    """Finite-size exact spectrum brackets the thermodynamic-limit band."""
    Nsites = 8
    H = build_model("aklt", {}, Nsites)
    sec = momentum_basis(Nsites, 3, Nsites // 2)
    es = eigensolve(sector_hamiltonian(H, sec), "full", sector=sec)
    e0_sector = float(es.energies[0])
    # ground energy of the ring is exactly zero for this model
    assert e0_sector > 0
    A = aklt_tensor()
    ans = ExcitationAnsatz(A, 3, aklt_projector())
    e, _ = excitation_energies(ans.norm_matrix(math.pi),
                               ans.hamiltonian_matrix(math.pi))
    assert abs(e0_sector - e[0]) < 2e-2


def test_continuum_edges_of_flat_band():
    grid = np.linspace(0.0, 2.0 * math.pi, 49)
    flat = np.full(49, 0.35)
    edges = continuum_edges(grid, flat, orders=(2, 3))
    assert np.allclose(edges[2], 0.70, atol=1e-10)
    assert np.allclose(edges[3], 1.05, atol=1e-10)


def test_continuum_edges_cosine_band():
    """Two-particle edge of eps(k) = 1 - 0.5 cos k, checked by direct scan."""
    grid = np.linspace(0.0, 2.0 * math.pi, 201)
    eps = 1.0 - 0.5 * np.cos(grid)
    edges = continuum_edges(grid, eps, orders=(2,), n_fine=4001)
    kf = np.linspace(0.0, 2.0 * math.pi, 20001)

    def eps_f(k):
        return 1.0 - 0.5 * np.cos(k)

    for i in (0, 50, 150):  # smooth points of the edge
        p = grid[i]
        direct = np.min(eps_f(p - kf) + eps_f(kf))
        assert abs(edges[2][i] - direct) < 1e-6
    # the edge has a corner at p = pi; interpolation is only grid-accurate
    direct = np.min(eps_f(grid[100] - kf) + eps_f(kf))
    assert abs(edges[2][100] - direct) < 1e-3
