import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hcbloch.dispersion import (DispersionBranch, DispersionRelation, effective_constant, solve_psi0,
                                solve_psi1, solve_psi2)
from hcbloch.exceptions import InversionError, SolvabilityError
from hcbloch.fem import FormSet


@pytest.mark.parametrize("angle", np.arange(8) * 22.5)
def test_effective_constant_bounds_and_identity(geom, angle):
    a = np.radians(angle)
    f = FormSet(geom, (np.cos(a), np.sin(a)))
    E, gap = effective_constant(f)
    assert 0 < E <= geom.area("Pc")
    assert abs(gap) < 1e-8


def test_effective_constant_isotropic_for_disk(geom):
    vals = [effective_constant(FormSet(geom, (np.cos(a), np.sin(a))))[0] for a in (0, np.pi / 4, np.pi / 2)]
    assert np.ptp(vals) < 1e-3 * vals[0]


def test_first_corrector_has_zero_mean(forms):
    psi1 = solve_psi1(forms)
    assert abs(forms.ones @ (forms.M_c @ psi1)) < 1e-13
    assert np.all(psi1[forms.pi] == 0)


def test_origin_and_band_edges(setup_pos):
    rel = setup_pos.relation
    assert rel.tau_squared(0.0) == 0.0
    edges = rel.band_edges(4)
    assert edges[0] == 0.0
    for m in range(1, 4):
        assert rel.poles[m - 1] < edges[m] < rel.poles[m]
        assert abs(rel.integral_psi0(edges[m])) < 1e-10


def test_relation_blows_up_below_asymptotes(setup_pos):
    rel = setup_pos.relation
    for m in range(4):
        mu = rel.poles[m]
        lo = rel.band_edges(m + 1)[m]
        near = rel.tau_squared(mu * (1 - 1e-4))
        mid = rel.tau_squared(0.5 * (lo + mu))
        assert near > 100 * mid > 0


def test_stop_band_has_negative_tau_squared(setup_pos):
    rel = setup_pos.relation
    z = 0.5 * (rel.poles[0] + rel.band_edges(2)[1])
    assert rel.tau_squared(z) < 0


def test_galerkin_and_spectral_modes_agree(setup_pos):
    rel = setup_pos.relation
    gal = DispersionRelation(rel.spectrum, rel.forms, 1, mode="galerkin")
    for z in (0.3, 5.0, 30.0):
        assert gal.tau_squared(z) == pytest.approx(rel.tau_squared(z), rel=2e-3)


@settings(max_examples=25, deadline=None)
@given(tau=st.floats(0.05, 20.0))
def test_inversion_round_trip(setup_pos, tau):
    rel = setup_pos.relation
    z = rel.invert_branch(0, tau)
    assert rel.tau_squared(z) == pytest.approx(tau * tau, rel=1e-10)
    assert rel.branch(0).contains(z)


def test_refine_solves_discrete_relation(setup_pos):
    rel = setup_pos.relation
    z = rel.refine(0, 1.0, rel.invert_branch(0, 1.0))
    gal = DispersionRelation(rel.spectrum, rel.forms, 1, mode="galerkin")
    assert gal.tau_squared(z) == pytest.approx(1.0, rel=1e-12)


def test_second_corrector_solvable_only_on_curve(setup_pos):
    rel, f = setup_pos.relation, setup_pos.forms
    z = rel.refine(0, 1.0, rel.invert_branch(0, 1.0))
    psi0 = solve_psi0(f, z, 1)
    psi1 = solve_psi1(f)
    psi2 = solve_psi2(f, 1.0, z, psi0, psi1, 1)
    assert abs(f.ones @ (f.M_c @ psi2)) < 1e-12
    with pytest.raises(SolvabilityError):
        solve_psi2(f, 1.0, z * 1.01, psi0, psi1, 1)


def test_negative_sign_single_monotone_branch(setup_neg):
    rel = setup_neg.relation
    zs = np.linspace(0, 80, 81)
    t2 = np.array([rel.tau_squared(z) for z in zs])
    assert t2[0] == 0 and np.all(np.diff(t2) > 0)
    assert rel.branch(0).upper == np.inf
    with pytest.raises(InversionError):
        rel.branch(1)


def test_branch_beyond_available_poles(setup_pos):
    with pytest.raises(InversionError):
        setup_pos.relation.branch(99)


def test_tau_above_band_top_is_rejected(setup_pos):
    rel = setup_pos.relation
    with pytest.raises(InversionError):
        rel.invert_branch(1, 1e6)


def test_physical_scaling():
    tau, zeta, eta = DispersionBranch.from_physical(k=2.0, omega=3.0, c=1.5, gamma=0.25, d=0.1)
    assert (tau, zeta, eta) == pytest.approx((1.0, 1.0, 0.2))
