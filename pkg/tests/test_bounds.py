import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcbloch.bounds import (estimate_radius, extension_constant, jacobian, negative_constants,
                            poincare_constant, resolvent_constant, run_majorants, run_shifted)
from hcbloch.exceptions import ConfigError, ResonanceError
from hcbloch.workflow import bounds_report, series_run


@pytest.fixture(scope="module")
def report_pos(setup_pos, series_pos):
    return bounds_report(setup_pos, series_pos)


@pytest.fixture(scope="module")
def report_neg(setup_neg, series_neg):
    return bounds_report(setup_neg, series_neg)


def test_poincare_constant(forms):
    omega, lam1 = poincare_constant(forms)
    assert omega == pytest.approx(np.sqrt(1 + 1 / lam1))
    assert lam1 > 0


def test_extension_constant_at_least_one(forms):
    A, residual = extension_constant(forms)
    assert A >= 1.0
    assert residual < 1e-8


def test_resolvent_constant_definition():
    vals = np.array([10.0, 20.0, 30.0])
    c = resolvent_constant(vals, 14.0, 1e-3)
    assert c == pytest.approx(max(np.sqrt(1 + vals) / np.abs(14.0 - vals)))


def test_resolvent_constant_rejects_resonance_and_extrapolation():
    vals = np.array([10.0, 20.0])
    with pytest.raises(ResonanceError):
        resolvent_constant(vals, 10.0 + 1e-6, 1e-3)
    with pytest.raises(ConfigError):
        resolvent_constant(vals, 25.0, 1e-3)


def test_negative_constants_independent_of_tau(setup_neg):
    runs = [bounds_report(setup_neg, series_run(setup_neg, 0, t, 6)).state for t in (0.5, 1.0, 2.0)]
    assert len({(s.K, s.K_tau, s.B_tau) for s in runs}) == 1


def test_negative_constants_direct(spectrum):
    c0, k, b = negative_constants(spectrum.values, spectrum, 1.3)
    assert k >= c0 > 0 and b > 0


def test_domination_positive(report_pos):
    assert report_pos.dominated
    assert all(v.all() for v in report_pos.detail.values())


def test_domination_negative(report_neg):
    assert report_neg.dominated


def test_shifted_recursion_is_identical(report_pos, report_neg):
    assert report_pos.shifted_gap == 0.0
    assert report_neg.shifted_gap == 0.0


def test_jacobian_determinant_is_one(report_pos, report_neg):
    assert abs(report_pos.determinant - 1) <= 1e-12
    assert abs(report_neg.determinant - 1) <= 1e-12


def test_jacobian_determinant_moves_with_offsets(report_pos):
    s = report_pos.state
    J = jacobian(s.K, s.K_tau, s.B_tau, s.tau, s.zeta0, 0.1, 0.1)
    assert abs(np.linalg.det(J) - 1) > 1e-6


def test_psi_star_envelope_majorizes_actual(report_pos, series_pos):
    assert report_pos.state.psi_star_majorant >= series_pos.psi_star_norm()


def test_majorant_radius_below_norm_radius(report_pos, report_neg):
    for rep in (report_pos, report_neg):
        assert 0 < rep.radius_majorant.radius <= rep.radius_norm.radius


@settings(max_examples=30, deadline=None)
@given(c=st.floats(0.1, 10.0), J=st.floats(0.2, 50.0), n=st.integers(6, 20))
def test_radius_of_geometric_sequence(c, J, n):
    seq = c * J ** np.arange(n)
    est = estimate_radius(seq)
    assert est.radius == pytest.approx(1 / J, rel=1e-10)
    assert est.r_squared == pytest.approx(1.0)


def test_radius_needs_enough_terms():
    with pytest.raises(ValueError):
        estimate_radius([1.0, 2.0, 4.0])


def test_radius_scales_with_tau():
    est = estimate_radius(2.0 ** np.arange(10), tau=3.0)
    assert est.radius_eta == pytest.approx(1.5)


def test_majorants_monotone_in_constant():
    seeds = {"p_bar0": 1.0, "p_bar1": 0.5, "p0": 1.0}
    a = run_majorants(2.0, 5.0, 0.1, 1.0, 0.4, seeds, 8)["a_hat"]
    b = run_majorants(3.0, 5.0, 0.1, 1.0, 0.4, seeds, 8)["a_hat"]
    assert np.all(b[2:] > a[2:])
    s = run_shifted(2.0, 5.0, 0.1, 1.0, 0.4, seeds, 8)
    assert np.array_equal(s["a"], a)
