"""End-to-end acceptance gate.

Each test covers one headline capability of the laboratory and prints a
single pass/fail line; tolerances are fixed and must not be loosened.
Reference values cited inline were computed with the independent oracles in
``oracles.py`` (free-fermion closed forms, literal displacement sums, sparse
Lanczos diagonalization).
"""

import math

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from quasix.lattice import Region
from quasix.models import SZ, build_model, lr_constants
from quasix.sector import (RegionOperator, eigensolve, lr_commutator_check,
                           momentum_basis, momentum_state, norm_bound_check,
                           partial_trace_localize, sector_hamiltonian,
                           sector_hamiltonian_sparse, dense_spectrum_union_check)
from quasix.filterlab import (FilterLab, gaussian_filter, make_schedule,
                              run_filter_pipeline, truncated_filter)
from quasix.spectral import dynamic_correlation, peak_weights
from quasix.mps import (ExcitationAnsatz, aklt_tensor, excitation_energies,
                        gauge_fix_map, regularized_resolvent_apply,
                        transfer_fixed_points, transfer_matrix)
from quasix.mps.tensors import deleted_transfer
from quasix.models import aklt_projector

from oracles import (brute_force_h_element, brute_force_norm_element,
                     tfim_single_particle_energy)


def _report(name: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    print(f"[{status}] {name}" + (f"  ({detail})" if detail else ""))


@pytest.fixture(scope="module")
def aklt_bands():
    """Lowest band at several momenta for block sizes 1..6 (shared)."""
    A = aklt_tensor()
    h = aklt_projector()
    momenta = [0.4 * math.pi, 0.6 * math.pi, 0.8 * math.pi, math.pi]
    lowest = {}
    degen = {}
    for ell in range(1, 7):
        ans = ExcitationAnsatz(A, ell, h)
        for p in momenta:
            e, _ = excitation_energies(ans.norm_matrix(p),
                                       ans.hamiltonian_matrix(p))
            lowest[(ell, p)] = float(e[0])
            degen[(ell, p)] = int(np.sum(e - e[0] < 1e-10))
    return momenta, lowest, degen


@pytest.fixture(scope="module")
def tfim12_reports():
    lab = FilterLab(build_model("tfim", {"g": 2.0}, 12))
    k = 6
    es = lab.sector_eigen(k)
    dE = es.isolation_gap(0)
    O = RegionOperator(Region((0,), 12), SZ)
    reps = [run_filter_pipeline(lab, O, k, 0, make_schedule(ell, dE, lab.H))
            for ell in range(1, 6)]
    return reps


def test_dispersion_reproduction(aklt_bands):
    """Variational band at p=pi versus ring diagonalization."""
    momenta, lowest, degen = aklt_bands
    p = math.pi
    # independent reference: sparse Lanczos on the 12-site ring, p=pi sector
    H12 = build_model("aklt", {}, 12)
    sec = momentum_basis(12, 3, 6)
    M = sector_hamiltonian_sparse(H12, sec)
    w = spla.eigsh(M, k=4, which="SA", return_eigenvectors=False)
    ed_ref = float(np.sort(w)[0])

    ok_deg = all(degen[(ell, p)] >= 3 for ell in range(1, 6))
    ok_sma = lowest[(1, p)] <= 10.0 / 27.0 + 1e-9
    ok_ed = abs(lowest[(5, p)] - ed_ref) < 5e-3
    ok_mono = lowest[(1, p)] > lowest[(5, p)]
    ok = ok_deg and ok_sma and ok_ed and ok_mono
    _report("dispersion reproduction at p=pi", ok,
            f"E1={lowest[(1, p)]:.9f} E5={lowest[(5, p)]:.9f} ED={ed_ref:.9f}")
    assert ok_deg and ok_sma and ok_ed and ok_mono


def test_exponential_convergence(aklt_bands):
    """Successive band improvements shrink geometrically for p > 0.4 pi."""
    momenta, lowest, _ = aklt_bands
    ok = True
    for p in (0.6 * math.pi, 0.8 * math.pi, math.pi):
        diffs = [lowest[(ell, p)] - lowest[(ell + 1, p)]
                 for ell in range(1, 6)]
        ok &= all(d > 0 for d in diffs)
        ok &= all(diffs[i + 1] / diffs[i] <= 0.9 for i in range(4))
    # borderline momentum: the run must complete; flag, don't assert, a rate
    p = 0.4 * math.pi
    diffs04 = [lowest[(ell, p)] - lowest[(ell + 1, p)] for ell in range(1, 6)]
    ok &= all(np.isfinite(diffs04))
    # the flag fires when the band meets the two-excitation continuum, the
    # physical mechanism that spoils clean geometric convergence there
    from quasix.mps import continuum_edges, dispersion_scan
    grid = np.linspace(0.0, 2.0 * math.pi, 25)
    band = dispersion_scan(aklt_tensor(), aklt_projector(), 3, momenta=grid)
    edge2 = continuum_edges(grid, band.lowest, orders=(2,),
                            out_momenta=np.array([p]))[2][0]
    borderline = lowest[(6, p)] >= 0.95 * edge2
    ok &= borderline
    _report("exponential band convergence", ok,
            f"borderline p=0.4pi flagged: {borderline}")
    assert ok


def test_filter_fidelity_theorem(tfim12_reports):
    """Desk-scale verification of the fidelity statement (N=12 spin flip)."""
    reps = tfim12_reports
    Fs = [r.F for r in reps]
    ok_mono = all(Fs[i + 1] >= Fs[i] - 1e-9 for i in range(4))
    ok_final = 1.0 - Fs[-1] < 1e-2
    ok_loc = all(r.loc_lhs <= r.loc_rhs for r in reps)
    ok_bound = all(r.bound is None or r.F >= r.bound for r in reps)
    ok = ok_mono and ok_final and ok_loc and ok_bound
    _report("filter fidelity theorem at desk scale", ok,
            f"1-F(5)={1.0 - Fs[-1]:.2e} ell0={reps[-1].ell0}")
    assert ok_mono and ok_final and ok_loc and ok_bound


def test_filter_algebra_suite():
    """Exact-filter identities on a small instance."""
    lab = FilterLab(build_model("tfim", {"g": 2.0}, 8))
    k, alpha = 4, 0
    es = lab.sector_eigen(k)
    E_t = float(es.energies[alpha])
    q = 0.6
    O = RegionOperator(Region((0,), 8), SZ).subtract_ground(lab.psi0)
    O_eig = lab.to_eigenbasis(O.embedded())
    O1_eig = gaussian_filter(O_eig, lab.energies, E_t, q)
    target = es.vectors[:, alpha]
    phi_O = lab.phi(O, k)
    phi_O1 = lab.phi(lab.from_eigenbasis(O1_eig) @ lab.psi0, k)
    ok_target = abs(np.vdot(target, phi_O) - np.vdot(target, phi_O1)) < 1e-12

    delta = E_t + lab.energies[None, :] - lab.energies[:, None]
    cap = np.exp(-0.5 * q * delta ** 2) * np.abs(O_eig)
    ok_suppress = np.all(np.abs(O1_eig) <= cap + 1e-14)

    T_big = 12.0 * math.sqrt(q)
    O2_eig = truncated_filter(O_eig, lab.energies, E_t, q, T_big)
    ok_limit = np.abs(O2_eig - O1_eig).max() < 1e-12

    phi = lab.phi(O, k)
    ov = es.vectors.conj().T @ phi
    n2 = np.linalg.norm(phi) ** 2
    ok_parseval = abs(np.sum(np.abs(ov) ** 2) - n2) < 1e-10
    semi2 = n2 - np.abs(ov[alpha]) ** 2
    ok_semi = abs((np.sum(np.abs(ov) ** 2) - np.abs(ov[alpha]) ** 2)
                  - semi2) < 1e-10
    ok = ok_target and ok_suppress and ok_limit and ok_parseval and ok_semi
    _report("filter algebra identities", ok)
    assert ok


def test_oracle_equivalences():
    ok = True
    details = []
    # sector spectra versus dense diagonalization
    for name, params in (("tfim", {"g": 2.0}), ("aklt", {})):
        union, dense = dense_spectrum_union_check(build_model(name, params, 6))
        err = float(np.max(np.abs(union - dense)))
        ok &= err < 1e-9
        details.append(f"{name} sector/dense {err:.1e}")

    # partial trace versus brute-force contraction
    rng = np.random.default_rng(11)
    Of = rng.standard_normal((32, 32)) + 1j * rng.standard_normal((32, 32))
    got = partial_trace_localize(Of, Region((1, 2), 5), 2).matrix
    T5 = Of.reshape((2,) * 10)
    want = np.einsum("abcdeaghde->bcgh", T5).reshape(4, 4) / 8
    ok &= np.max(np.abs(got - want)) < 1e-12

    # resolvent versus truncated power series
    A = aklt_tensor()
    E = transfer_matrix(A)
    l, r = transfer_fixed_points(A)
    Et = deleted_transfer(E, l, r)
    b = rng.standard_normal(4) + 1j * rng.standard_normal(4)
    p = 0.6
    got_r = regularized_resolvent_apply(E, p, l, r, b)
    Pb = b - (l.conj().reshape(-1) @ b) * r.reshape(-1)
    series, term = np.zeros_like(b), Pb
    for _ in range(200):
        series += term
        term = np.exp(1j * p) * (Et @ term)
    ok &= np.linalg.norm(got_r - series) < 1e-10

    # effective-matrix assembly versus literal displacement sums
    h = aklt_projector()
    for ell in (1, 2):
        ans = ExcitationAnsatz(A, ell, h)
        G = gauge_fix_map(A, ell)
        K = G.shape[0]
        u = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
        v = G @ (rng.standard_normal(K) + 1j * rng.standard_normal(K))
        ub = u.reshape(2, 3 ** ell, 2)
        vb = v.reshape(2, 3 ** ell, 2)
        pm = 0.7
        errN = abs(u.conj() @ ans.norm_matrix(pm, gauge_fixed=False) @ v
                   - brute_force_norm_element(A, l, r, ub, vb, ell, pm,
                                              kmax=32))
        errH = abs(u.conj() @ ans.hamiltonian_matrix(pm, gauge_fixed=False) @ v
                   - brute_force_h_element(A, l, r, h, ub, vb, ell, pm,
                                           kmax=20, jpad=20))
        ok &= errN < 1e-10 and errH < 1e-10
        details.append(f"l={ell} N {errN:.1e} H {errH:.1e}")
    _report("oracle equivalences", ok, "; ".join(details))
    assert ok


def test_light_cone_and_norm_bounds():
    H = build_model("tfim", {"g": 2.0}, 10)
    mu = 1.0
    s = lr_constants(H, mu)
    A = RegionOperator(Region((0,), 10), SZ)
    ok = True
    for dist in (3, 4, 5):
        B = RegionOperator(Region((dist,), 10), SZ)
        for t in (0.05, 0.1, 0.2):
            lhs, rhs = lr_commutator_check(A, B, t, H, mu, s)
            ok &= lhs <= rhs

    # clustering norm bound on a modest-gap chain where it is informative
    Hn = build_model("tfim", {"g": 1.5}, 8)
    lab = FilterLab(Hn)
    k = 4
    sec = lab.sector(k)
    es = lab.sector_eigen(k)
    delta = es.isolation_gap(0)
    ops = [RegionOperator(Region((0,), 8), SZ)]
    rng = np.random.default_rng(5)
    M = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
    ops.append(RegionOperator(Region((0, 1), 8), M + M.conj().T))
    for O in ops:
        O2 = O.subtract_ground(lab.psi0)
        lhs, rhs = norm_bound_check(O2, k, lab.psi0, sec, delta)
        ok &= lhs <= rhs
    _report("light-cone and norm bounds", ok)
    assert ok


def test_spectral_suite():
    N, g = 10, 2.0
    lab = FilterLab(build_model("tfim", {"g": g}, N))
    O = RegionOperator(Region((0,), N), SZ)
    ok = True
    details = []
    for k in range(N):
        es = lab.sector_eigen(k)
        line = dynamic_correlation(O, es, lab.psi0, gap=lab.gap)
        total = line.total_weight
        integral = float(np.trapezoid(line.S, line.omega))
        ok &= abs(integral - total) < 0.01 * total
        phi = momentum_state(O.subtract_ground(lab.psi0), k, lab.psi0,
                             lab.sector(k))
        expect = np.abs(es.vectors.conj().T @ phi) ** 2
        ok &= float(np.max(np.abs(line.residues - expect))) < 1e-10
        energies, weights = peak_weights(line, weight_floor=1e-12)
        i = int(np.argmax(weights))
        p = 2.0 * math.pi * k / N
        ok &= abs(energies[i] - tfim_single_particle_energy(p, N, g)) < 1e-8
    _report("spectral decomposition suite", ok)
    assert ok
