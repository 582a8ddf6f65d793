"""Energy-filter algebra: exact filter, truncated filter, pipeline."""

import math

import mpmath
import numpy as np
import pytest

from quasix.lattice import Region
from quasix.models import SZ, build_model
from quasix.sector import RegionOperator
from quasix.filterlab import (FilterLab, FilterSchedule, QuadratureError,
                              gaussian_filter, gaussian_filter_factors,
                              make_schedule, run_filter_pipeline,
                              seminorm_prime, spectral_norm, theorem_bound,
                              truncated_filter, truncated_filter_factors)


@pytest.fixture(scope="module")
def lab():
    return FilterLab(build_model("tfim", {"g": 2.0}, 8))


def _pipeline_inputs(lab, k=4, alpha=0):
    es = lab.sector_eigen(k)
    O = RegionOperator(Region((0,), 8), SZ).subtract_ground(lab.psi0)
    return es, O


def test_gaussian_factors_form(lab):
    q = 0.7
    E_t = 1.5
    fac = gaussian_filter_factors(lab.energies, E_t, q)
    delta = E_t + lab.energies[None, :] - lab.energies[:, None]
    assert np.allclose(fac, np.exp(-0.5 * q * delta ** 2), atol=1e-15)
    assert fac.max() <= 1.0 + 1e-15


def test_target_preservation_identity(lab):
    """The exact filter leaves every on-target matrix element unchanged."""
    k, alpha = 4, 0
    es, O = _pipeline_inputs(lab, k, alpha)
    E_t = float(es.energies[alpha])
    O_eig = lab.to_eigenbasis(O.embedded())
    O1 = lab.from_eigenbasis(gaussian_filter(O_eig, lab.energies, E_t, 0.9))
    target = es.vectors[:, alpha]
    phi_O = lab.phi(O, k)
    phi_O1 = lab.phi(np.asarray(O1 @ lab.psi0).ravel(), k)
    a = np.vdot(target, phi_O)
    b = np.vdot(target, phi_O1)
    assert abs(a - b) < 1e-12


def test_off_target_suppression(lab):
    k, alpha = 4, 0
    es, O = _pipeline_inputs(lab, k, alpha)
    E_t = float(es.energies[alpha])
    q = 1.3
    O_eig = lab.to_eigenbasis(O.embedded())
    O1 = gaussian_filter(O_eig, lab.energies, E_t, q)
    delta = E_t + lab.energies[None, :] - lab.energies[:, None]
    cap = np.exp(-0.5 * q * delta ** 2) * np.abs(O_eig)
    assert np.all(np.abs(O1) <= cap + 1e-14)


def test_truncated_converges_to_exact(lab):
    """O2 -> O1 as the integration window T grows."""
    k, alpha = 4, 0
    es, O = _pipeline_inputs(lab, k, alpha)
    E_t = float(es.energies[alpha])
    q = 0.05
    O_eig = lab.to_eigenbasis(O.embedded())
    exact = gaussian_filter(O_eig, lab.energies, E_t, q)
    T_big = 12.0 * math.sqrt(q)  # 12 Gaussian widths: tail < 1e-30
    O2 = truncated_filter(O_eig, lab.energies, E_t, q, T_big)
    assert np.abs(O2 - exact).max() < 1e-12


def test_truncated_factor_against_quadrature_oracle():
    """One matrix entry versus an independent mpmath time integral."""
    q, T = 0.31, 0.8
    energies = np.array([0.0, 1.37, 2.9])
    E_t = 1.1
    got = truncated_filter_factors(energies, E_t, q, T,
                                   nodes=256)
    for m in range(3):
        for n in range(3):
            D = E_t + energies[n] - energies[m]
            val = mpmath.quad(
                lambda t: mpmath.exp(1j * D * t - t ** 2 / (2 * q)), [-T, T]
            ) / mpmath.sqrt(2 * mpmath.pi * q)
            assert abs(complex(val) - got[m, n]) < 1e-12


def test_truncated_filter_quadrature_check():
    energies = np.linspace(0.0, 40.0, 50)
    O = np.ones((50, 50))
    with pytest.raises(QuadratureError):
        truncated_filter(O, energies, 1.0, 0.5, 5.0, nodes=4)
    with pytest.raises(ValueError):
        truncated_filter(O, energies, 1.0, 0.5, -1.0)


def test_parseval_and_seminorm_decomposition(lab):
    k, alpha = 3, 0
    es, O = _pipeline_inputs(lab, k, alpha)
    phi = lab.phi(O, k)
    ov = es.vectors.conj().T @ phi
    # Parseval over the complete sector eigenbasis
    assert abs(np.sum(np.abs(ov) ** 2) - np.linalg.norm(phi) ** 2) < 1e-10
    semi = seminorm_prime(phi, alpha, es)
    assert abs(semi ** 2 + np.abs(ov[alpha]) ** 2
               - np.linalg.norm(phi) ** 2) < 1e-10


def test_spectral_norm_matches_svd():
    rng = np.random.default_rng(3)
    M = rng.standard_normal((40, 40)) + 1j * rng.standard_normal((40, 40))
    assert abs(spectral_norm(M) - np.linalg.norm(M, 2)) < 1e-8


def test_pipeline_report_consistency(lab):
    k, alpha = 4, 0
    es = lab.sector_eigen(k)
    dE = es.isolation_gap(alpha)
    O = RegionOperator(Region((0,), 8), SZ)
    rep = run_filter_pipeline(lab, O, k, alpha,
                              make_schedule(2, dE, lab.H))
    assert 0.0 <= rep.F <= 1.0 + 1e-12
    assert abs(rep.overlap ** 2 + rep.seminorm ** 2 - rep.norm ** 2) < 1e-10
    assert rep.loc_lhs <= rep.loc_rhs
    assert not rep.low_weight
    assert rep.bound_violated == (rep.bound is not None and rep.F < rep.bound)


def test_pipeline_fidelity_grows_with_ell(lab):
    k, alpha = 4, 0
    es = lab.sector_eigen(k)
    dE = es.isolation_gap(alpha)
    O = RegionOperator(Region((0,), 8), SZ)
    Fs = [run_filter_pipeline(lab, O, k, alpha,
                              make_schedule(ell, dE, lab.H)).F
          for ell in (1, 2, 3)]
    assert Fs[0] <= Fs[1] + 1e-9 and Fs[1] <= Fs[2] + 1e-9
    assert 1.0 - Fs[-1] < 5e-3


def test_theorem_bound_none_when_denominator_fails():
    assert theorem_bound(1, f=1e-3, dE=0.1, v_lr=10.0, DX=5.0, c=1.0) is None
    b = theorem_bound(400, f=0.5, dE=2.0, v_lr=10.0, DX=5.0, c=1.0)
    assert b is not None and 0.9 < b <= 1.0


def test_overstated_isolation_gap_is_flagged(lab):
    """A deliberately exaggerated gap tightens the bound until it breaks."""
    k, alpha = 4, 0
    es = lab.sector_eigen(k)
    dE_true = es.isolation_gap(alpha)
    O = RegionOperator(Region((0,), 8), SZ)
    flagged = False
    for scale in (50.0, 200.0, 1000.0):
        for ell in (1, 2, 3):
            sched = make_schedule(ell, scale * dE_true, lab.H)
            rep = run_filter_pipeline(lab, O, k, alpha, sched)
            if rep.bound_violated:
                flagged = True
    assert flagged
