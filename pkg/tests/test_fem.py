import numpy as np
import pytest
import scipy.sparse as sp

from hcbloch.exceptions import SolvabilityError
from hcbloch.fem import Dirichlet, LinearSolver, ZeroMean, assemble, eigensolve, solve_constrained


def test_stiffness_annihilates_constants(geom):
    K = assemble(geom, "stiffness", "Q")
    assert np.abs(K @ np.ones(geom.n_dofs)).max() < 1e-12


def test_stiffness_is_symmetric_positive_semidefinite(coarse_geom):
    K = assemble(coarse_geom, "stiffness", "Q").matrix.toarray()
    assert np.allclose(K, K.T, atol=1e-13)
    assert np.linalg.eigvalsh(K).min() > -1e-10


@pytest.mark.parametrize("region", ["P", "Pc", "Q"])
def test_mass_total_equals_region_area(geom, region):
    M = assemble(geom, "mass", region)
    one = np.ones(geom.n_dofs)
    assert one @ (M @ one) == pytest.approx(geom.area(region), abs=1e-10)


def test_complement_mass_matches_exact_area(geom):
    M = assemble(geom, "mass", "Pc")
    one = np.ones(geom.n_dofs)
    assert one @ (M @ one) == pytest.approx(1 - np.pi * 0.375**2, abs=2e-4)


def test_directional_form_differentiates_linear_field(geom):
    # x is single-valued on the inclusion, so its interpolant is exact there
    D = assemble(geom, "directional", "P", (1.0, 0.0))
    x = geom.dof_coordinates()[:, 0]
    one = np.ones(geom.n_dofs)
    assert one @ (D @ x) == pytest.approx(geom.area("P"), rel=1e-12)


def test_directional_form_on_periodic_field(geom):
    D = assemble(geom, "directional", "Q", (1.0, 0.0))
    x = geom.dof_coordinates()[:, 0]
    f, g = np.sin(2 * np.pi * x), np.cos(2 * np.pi * x)
    # int_Q cos(2 pi x) d/dx sin(2 pi x) = pi
    assert g @ (D @ f) == pytest.approx(np.pi, rel=5e-3)


def test_directional_form_needs_unit_vector(geom):
    with pytest.raises(ValueError):
        assemble(geom, "directional", "Q", (1.0, 1.0))


def test_dirichlet_solve_reproduces_boundary_values(forms, geom):
    pi, gamma = forms.pi, forms.gamma
    vals = np.linspace(0, 1, len(gamma))
    x = solve_constrained(forms.K_p, np.zeros(geom.n_dofs), Dirichlet(pi, gamma, vals))
    assert np.allclose(x[gamma], vals)
    assert np.abs((forms.K_p @ x)[pi]).max() < 1e-10


def test_constant_boundary_data_gives_constant_harmonic_field(forms, geom):
    x = solve_constrained(forms.K_p, np.zeros(geom.n_dofs),
                          Dirichlet(forms.pi, forms.gamma, np.ones(len(forms.gamma))))
    assert np.abs(x[forms.pi] - 1).max() < 1e-12


def test_zero_mean_neumann_solve(forms, geom, rng):
    solver = forms.neumann_solver()
    rhs = np.zeros(geom.n_dofs)
    rhs[forms.pc] = rng.standard_normal(len(forms.pc))
    rhs[forms.pc] -= rhs[forms.pc].mean()
    x = solver.solve(rhs)
    w = forms.M_c @ forms.ones
    assert abs(w @ x) < 1e-12
    assert np.abs((forms.K_c @ x)[forms.pc] - rhs[forms.pc]).max() < 1e-9


def test_incompatible_neumann_data_raise(forms, geom):
    rhs = np.zeros(geom.n_dofs)
    rhs[forms.pc] = 1.0
    with pytest.raises(SolvabilityError):
        forms.neumann_solver().solve(rhs)


def test_cg_matches_direct(forms, geom, rng):
    rhs = np.zeros(geom.n_dofs)
    rhs[forms.pi] = rng.standard_normal(len(forms.pi))
    con = Dirichlet(forms.pi, forms.gamma, np.zeros(len(forms.gamma)))
    a = LinearSolver(forms.K_p, con, "direct").solve(rhs)
    b = LinearSolver(forms.K_p, con, "cg", tol=1e-12).solve(rhs)
    assert np.abs(a - b).max() < 1e-8 * np.abs(a).max()


def test_eigensolve_small_dense_matches_scipy():
    n = 8
    A = sp.diags([2.0] * n) - sp.diags([1.0] * (n - 1), 1) - sp.diags([1.0] * (n - 1), -1)
    B = sp.identity(n)
    vals, vecs = eigensolve(A.tocsr(), B.tocsr(), 3)
    exact = 2 - 2 * np.cos(np.arange(1, 4) * np.pi / (n + 1))
    assert np.allclose(vals, exact)
    assert np.allclose(vecs.T @ vecs, np.eye(3), atol=1e-12)


def test_zero_mean_constraint_weights(forms, geom):
    con = ZeroMean(forms.pc, (forms.M_c @ forms.ones)[forms.pc])
    assert len(con.dofs) == len(con.weights)
