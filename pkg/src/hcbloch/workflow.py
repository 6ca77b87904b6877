"""End-to-end pipelines shared by the command line and the estimators."""
from dataclasses import dataclass, field

import numpy as np

from .bounds import (assemble_constants, domination, estimate_radius, jacobian_determinant_check,
                     run_majorants, run_shifted)
from .dispersion import DispersionRelation
from .fem import FormSet
from .geometry import build_mesh
from .hierarchy import run_hierarchy
from .spectrum import compute_spectrum


@dataclass(eq=False)
class CellSetup:
    """Mesh, forms, inclusion spectrum and dispersion relation for one direction and sign."""

    geom: object
    forms: FormSet
    spectrum: object
    sign: int
    relation: DispersionRelation


def prepare(inclusion, h, direction=(1.0, 0.0), sign=1, n_modes=50, backend="fem", theta=None):
    """Build everything that does not depend on ``tau``."""
    geom = build_mesh(inclusion, h)
    forms = FormSet(geom, direction)
    spectrum = compute_spectrum(geom, n_modes, backend, theta)
    relation = DispersionRelation(spectrum, forms, sign)
    return CellSetup(geom, forms, spectrum, sign, relation)


def branch_point(setup, branch, tau):
    """Leading-order frequency on ``branch`` at ``tau``, exact for the discrete cell problem."""
    rel = setup.relation
    guess = rel.invert_branch(branch, tau)
    return rel.refine(branch, tau, guess)


def series_run(setup, branch=0, tau=1.0, order=10, epsilon=None):
    """Hierarchy coefficients at the branch point ``(tau, zeta0(tau))``."""
    zeta0 = branch_point(setup, branch, tau)
    return run_hierarchy(setup.forms, setup.spectrum, zeta0, tau, setup.sign, order, branch, epsilon)


@dataclass(eq=False)
class BoundsReport:
    """Constants, majorants and radius estimates for one hierarchy run."""

    state: object
    norms: dict
    majorants: dict
    flags: np.ndarray
    detail: dict
    determinant: float
    shifted_gap: float
    radius_majorant: object
    radius_norm: object
    extras: dict = field(default_factory=dict)

    @property
    def dominated(self):
        return bool(self.flags.all())


def h1_norm_sequence(norms, order):
    """``tau^m ||psi_m||_{H1(Q)}`` from the Pc and P parts."""
    return np.sqrt(norms["p_bar"][:order + 1] ** 2 + norms["p"][:order + 1] ** 2)


def bounds_report(setup, solution, epsilon=None, tau_max=None, window=6):
    """Majorant domination, Jacobian determinant and radius estimates for ``solution``."""
    rel = setup.relation
    branch = rel.branch(solution.branch)
    state = assemble_constants(setup.forms, setup.spectrum, solution.sign, solution.zeta0, solution.tau,
                               branch=branch, relation=rel if solution.sign > 0 else None,
                               psi_star_norm=solution.psi_star_norm(), epsilon=epsilon, tau_max=tau_max)
    norms = solution.norms()
    seeds = {"p_bar0": norms["p_bar"][0], "p_bar1": norms["p_bar"][1], "p0": norms["p"][0]}
    M = solution.order
    maj = run_majorants(state.K, state.K_tau, state.B_tau, solution.tau, solution.zeta0, seeds, M)
    shifted = run_shifted(state.K, state.K_tau, state.B_tau, solution.tau, solution.zeta0, seeds, M)
    gap = max(float(np.max(np.abs(shifted["a"] - maj["a_hat"]))),
              float(np.max(np.abs(shifted["b"][1:] - maj["b_hat"]))),
              float(np.max(np.abs(shifted["c"][1:] - maj["c_hat"]))),
              float(np.max(np.abs(shifted["d"][1:] - maj["d_hat"]))))
    flags, detail = domination(norms, maj, M)
    w = min(window, M + 1)
    r_maj = estimate_radius(maj["a_hat"], w, solution.tau)
    r_norm = estimate_radius(h1_norm_sequence(norms, M), w, solution.tau)
    return BoundsReport(state=state, norms=norms, majorants=maj, flags=flags, detail=detail,
                        determinant=jacobian_determinant_check(state), shifted_gap=gap,
                        radius_majorant=r_maj, radius_norm=r_norm)
