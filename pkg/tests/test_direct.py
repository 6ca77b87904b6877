import numpy as np
import pytest

from hcbloch.direct import (align_fields, bloch_operators, convergence_study, direct_bloch_solve, evaluate_series,
                            loglog_slope, weakform_residual)
from hcbloch.exceptions import ConfigError, TrackingError
from hcbloch.fem import FormSet


@pytest.fixture(scope="module")
def direct05(series_pos):
    return direct_bloch_solve(series_pos.forms, 0.05, 1.0, 1, target=series_pos.zeta0)


def test_direct_eigenpair_is_accurate_and_real(direct05):
    assert direct05.residual <= 1e-8
    assert abs(direct05.imag_part) <= 1e-10


def test_direct_field_normalization(direct05, forms):
    w = forms.M_c @ forms.ones
    assert w @ direct05.field == pytest.approx(w @ forms.ones, rel=1e-12)


def test_small_eta_limit(series_pos):
    d = direct_bloch_solve(series_pos.forms, 0.01, 1.0, 1, target=series_pos.zeta0)
    assert abs(d.zeta - series_pos.zeta0) < 1e-2 * series_pos.zeta0


def test_gauge_invariance(direct05, forms):
    A, B = bloch_operators(forms, 0.05, 1.0, 1)
    for c in (1.0, np.exp(0.7j), -1j):
        u = c * direct05.field
        rq = np.vdot(u, A @ u) / np.vdot(u, B @ u)
        assert rq.real == pytest.approx(direct05.zeta, rel=1e-9)
        assert weakform_residual(forms, u, direct05.zeta, 0.05, 1.0, 1) < 1e-12


def test_reversed_direction_conjugates_field(direct05, geom):
    back = FormSet(geom, (-1.0, 0.0))
    d = direct_bloch_solve(back, 0.05, 1.0, 1, target=direct05.target)
    assert d.zeta == pytest.approx(direct05.zeta, rel=1e-13)
    err, _ = align_fields(np.conj(direct05.field), d.field, back.M_q)
    assert err < 1e-10


def test_frequency_stays_in_band(series_pos, setup_pos):
    d = direct_bloch_solve(series_pos.forms, 0.08, 1.0, 1, target=series_pos.zeta0)
    assert setup_pos.relation.branch(0).contains(d.zeta)


def test_tracking_error_far_from_any_eigenvalue(forms):
    with pytest.raises(TrackingError):
        direct_bloch_solve(forms, 0.05, 1.0, 1, target=20.0)


def test_eta_range_checked(forms):
    with pytest.raises(ConfigError):
        direct_bloch_solve(forms, 0.6, 1.0, 1, target=0.38)
    with pytest.raises(ConfigError):
        direct_bloch_solve(forms, 0.0, 1.0, 1, target=0.38)


def test_series_at_origin(series_pos):
    ev = evaluate_series(series_pos, 0.0)
    assert ev.zeta == series_pos.zeta0
    assert np.allclose(ev.field, series_pos.psi[0])


def test_series_frequency_is_real(series_pos):
    for eta in (0.02, 0.1, 0.3):
        assert abs(evaluate_series(series_pos, eta).imag_part) <= 1e-8


def test_truncation_self_convergence(series_pos):
    diffs = [abs(evaluate_series(series_pos, e, 2).zeta - evaluate_series(series_pos, e, 4).zeta)
             for e in (0.05, 0.025)]
    assert np.log2(diffs[0] / diffs[1]) >= 3.5


def test_series_outside_radius_warns(series_pos):
    with pytest.warns(RuntimeWarning):
        evaluate_series(series_pos, 0.5, radius=0.4)


def test_order_range_checked(series_pos):
    with pytest.raises(ConfigError):
        evaluate_series(series_pos, 0.1, 11)


def test_direct_residual_small_random_large(direct05, forms, rng):
    assert weakform_residual(forms, direct05.field, direct05.zeta, 0.05, 1.0, 1) < 1e-8
    u = rng.standard_normal(forms.geom.n_dofs) + 1j * rng.standard_normal(forms.geom.n_dofs)
    assert weakform_residual(forms, u, 0.38, 0.05, 1.0, 1) > 1e-2


def test_series_residual_decays_with_eta(series_pos):
    res = [weakform_residual(series_pos.forms, evaluate_series(series_pos, e, 4).field,
                             evaluate_series(series_pos, e, 4).zeta, e, 1.0, 1) for e in (0.05, 0.025)]
    assert np.log2(res[0] / res[1]) >= 4.5


def test_error_decreases_with_order(series_pos):
    errs = [convergence_study(series_pos, [0.05], m).rows[0]["abs_err"] for m in (2, 4, 6)]
    assert errs[0] > errs[1] > errs[2]


def test_convergence_table_csv(series_pos):
    table = convergence_study(series_pos, [0.08, 0.04], 4)
    lines = table.to_csv().splitlines()
    assert lines[0] == "eta,M,zeta_series,zeta_direct,abs_err,field_err,residual"
    assert lines[1].split(",")[1] == "4"
    assert table.zeta_slope > 3


def test_negative_sign_study(series_neg):
    table = convergence_study(series_neg, [0.08, 0.04, 0.02], 6)
    assert table.zeta_slope >= 5
    assert table.residual_slope >= 6


def test_align_fields_recovers_scale(rng, forms):
    u = rng.standard_normal(forms.geom.n_dofs) + 0j
    err, c = align_fields(u, (2 - 1j) * u, forms.M_q)
    assert err < 1e-14
    assert c == pytest.approx(1 / (2 - 1j))


def test_loglog_slope_exact():
    x = np.array([1.0, 0.5, 0.25])
    assert loglog_slope(x, 3 * x**5) == pytest.approx(5.0)
