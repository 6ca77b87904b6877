import numpy as np
import pytest

from hcbloch.exceptions import ConfigError, ResonanceError
from hcbloch.hierarchy import reality_sign, run_hierarchy
from hcbloch.workflow import branch_point


@pytest.fixture(params=["pos", "neg"])
def solution(request, series_pos, series_neg):
    return series_pos if request.param == "pos" else series_neg


def test_all_solvability_defects_small(solution):
    assert solution.max_defect <= 1e-8
    assert len(solution.defects_of("solvability")) == solution.order + 1


def test_coefficients_have_zero_mean_on_complement(solution):
    assert solution.zero_mean_defects().max() <= 1e-10


def test_odd_frequency_coefficients_vanish(solution):
    z = np.abs(solution.zeta)
    assert z[1::2].max() <= 1e-6 * z[0::2].max()


def test_reality_bookkeeping(solution):
    z = np.asarray(solution.z)
    for m in range(0, solution.order + 1, 2):
        assert (1j**m * z[m]).imag == 0
        assert solution.zeta[m] == z[m] * reality_sign(m)


def test_inclusion_decomposition(solution):
    assert solution.decomposition_defects().max() < 1e-12


def test_base_coefficient(solution):
    psi0 = solution.psi[0]
    assert np.all(psi0[solution.forms.pc] == 1.0)
    assert solution.zeta[0] == solution.zeta0


def test_divisor_against_spectral_value(solution):
    assert solution.divisor == pytest.approx(solution.divisor_spectral, rel=0.05)
    assert solution.divisor > solution.forms.geom.area("Pc")


def test_spectral_cross_check_of_base_fields(solution):
    assert solution.spectral_check["psi0"] < 1e-3
    assert solution.spectral_check["psi_star"] < 2e-2


def test_series_evaluates_to_base_at_origin(solution):
    assert np.allclose(solution.field_at(0.0), solution.psi[0])
    assert solution.zeta_at(0.0) == solution.zeta0


def test_positive_sign_frequency_coefficients(series_pos):
    z = series_pos.zeta
    assert z[0] == pytest.approx(0.381356, abs=1e-5)
    # leading correction raises the frequency on the acoustic branch
    assert z[2] > 0


def test_norms_shapes(series_pos):
    nr = series_pos.norms()
    assert len(nr["p_bar"]) == series_pos.order + 3
    assert len(nr["p"]) == len(nr["s"]) == series_pos.order + 1
    assert nr["p_tilde"][0] == 0


def test_hierarchy_needs_positive_tau(setup_pos):
    with pytest.raises(ConfigError):
        run_hierarchy(setup_pos.forms, setup_pos.spectrum, 0.0, 0.0, 1, 4)


def test_hierarchy_needs_order_two(setup_pos):
    with pytest.raises(ConfigError):
        run_hierarchy(setup_pos.forms, setup_pos.spectrum, 0.38, 1.0, 1, 1)


def test_resonant_frequency_rejected(setup_pos):
    nu = setup_pos.spectrum.mu_prime[0]
    with pytest.raises(ResonanceError):
        run_hierarchy(setup_pos.forms, setup_pos.spectrum, nu, 1.0, 1, 4)


def test_second_branch_runs(setup_pos):
    tau = 3.0
    z = branch_point(setup_pos, 1, tau)
    sol = run_hierarchy(setup_pos.forms, setup_pos.spectrum, z, tau, 1, 6, branch=1)
    assert sol.max_defect < 1e-8
    assert np.abs(sol.zeta[1::2]).max() < 1e-6 * np.abs(sol.zeta[0::2]).max()
