"""Power-series hierarchy for Bloch waves in a high-contrast cell.

The finite element Bloch problem at quasi-staticity ``eta`` is the pencil

    tau^2 H_c(eta) u + sign eta^2 H_p(eta) u = eta^2 zeta M_q u,
    H(eta) = K + i eta S + eta^2 M,

with ``S = D^T - D`` the antisymmetric directional form. Substituting
``u = sum eta^m i^m psi_m`` and ``zeta = sum eta^m zeta_m`` and writing
``z_m = (-i)^m zeta_m`` gives, order by order, real equations

    tau^2 (K_c psi_m + S_c psi_{m-1} - M_c psi_{m-2})
      - sign (K_p psi_{m-2} + S_p psi_{m-3} - M_p psi_{m-4})
      + M_q sum_{l=0}^{m-2} z_l psi_{m-2-l} = 0.

Rows inside P determine ``psi_{m-2}`` there (a Dirichlet problem with the
trace from Pc); the remaining rows form a periodic Neumann problem for
``psi_m`` in Pc whose solvability fixes ``z_{m-2}``. Every coefficient is
real, so all solves are real. Odd ``z_m`` are computed, not assumed to
vanish, and must come out at roundoff level.
"""
from dataclasses import dataclass, field

import numpy as np

from .dispersion import solve_psi0, solve_psi1, solve_psi_star
from .exceptions import ConfigError, HierarchyError, SolvabilityError
from .spectrum import check_resonance, spectral_sum

DEFECT_TOL = 1e-8


def reality_sign(m):
    """``Re + Im`` of ``(-i)^m``: the real factor linking ``z_m`` and ``zeta_m``."""
    return (1, -1, -1, 1)[m % 4]


@dataclass(eq=False)
class SeriesSolution:
    """Coefficients of the series for one branch point ``(tau, zeta0)``.

    Attributes
    ----------
    psi : list of ndarray
        Coefficient fields ``psi_m`` on reduced dofs for ``m <= order``.
    psi_tilde : list of ndarray
        Inclusion parts without the frequency correction, ``psi_tilde_0 = 0``.
    psi_star : ndarray
    z : ndarray
        Real coefficients ``z_m = (-i)^m zeta_m``.
    complement_ahead : list of ndarray
        ``psi_{order+1}``, ``psi_{order+2}`` on Pc (needed for the last ``z``).
    defects : list of tuple
        ``(equation, order, value)`` for every solvability check.
    """

    sign: int
    tau: float
    zeta0: float
    direction: tuple
    branch: int
    order: int
    forms: object = field(repr=False)
    psi: list = field(default_factory=list, repr=False)
    psi_tilde: list = field(default_factory=list, repr=False)
    psi_star: np.ndarray = field(default=None, repr=False)
    z: list = field(default_factory=list)
    complement_ahead: list = field(default_factory=list, repr=False)
    defects: list = field(default_factory=list)
    divisor: float = None
    divisor_spectral: float = None
    spectral_check: dict = field(default_factory=dict)

    @property
    def zeta(self):
        """Frequency coefficients ``zeta_m`` as reals (``zeta_m = z_m / sigma_m``)."""
        return np.array([zm / reality_sign(m) for m, zm in enumerate(self.z)])

    @property
    def max_defect(self):
        return max((d for _, _, d in self.defects), default=0.0)

    def defects_of(self, equation):
        return [d for e, _, d in self.defects if e == equation]

    def zero_mean_defects(self):
        """``|int_Pc psi_m|`` for ``1 <= m <= order``."""
        w = self.forms.M_c @ self.forms.ones
        return np.array([abs(w @ p) for p in self.psi[1:]])

    def decomposition_defects(self):
        """``max |psi_m - psi_tilde_m - z_m psi_star|`` over interior-P dofs, ``m >= 1``."""
        pi = self.forms.pi
        return np.array([np.abs(p[pi] - t[pi] - zm * self.psi_star[pi]).max()
                         for p, t, zm in zip(self.psi[1:], self.psi_tilde[1:], self.z[1:])])

    def norms(self):
        """Scaled norms ``tau^m ||.||_{H1}``.

        Returns
        -------
        dict
            ``p_bar`` (Pc part), ``p`` (P part), ``p_tilde``, ``s`` (``tau^m |zeta_m|``),
            each an array over ``m = 0..order``; ``p_bar`` has two extra entries.
        """
        f = self.forms
        gc = f.K_c + f.M_c
        gp = f.K_p + f.M_p
        t = self.tau

        def h1(g, v):
            return float(np.sqrt(max(v @ (g @ v), 0.0)))

        pc_fields = list(self.psi) + list(self.complement_ahead)
        p_bar = np.array([t**m * h1(gc, v) for m, v in enumerate(pc_fields)])
        p = np.array([t**m * h1(gp, v) for m, v in enumerate(self.psi)])
        p_tilde = np.array([t**m * h1(gp, v) for m, v in enumerate(self.psi_tilde)])
        s = np.array([t**m * abs(zm) for m, zm in enumerate(self.z)])
        return {"p_bar": p_bar, "p": p, "p_tilde": p_tilde, "s": s}

    def psi_star_norm(self):
        f = self.forms
        v = self.psi_star
        return float(np.sqrt(v @ ((f.K_p + f.M_p) @ v)))

    def field_at(self, eta):
        """Partial sum ``sum_{m<=order} eta^m i^m psi_m`` (complex)."""
        out = np.zeros(self.forms.geom.n_dofs, dtype=complex)
        for m, p in enumerate(self.psi):
            out += (eta**m) * (1j**m) * p
        return out

    def zeta_at(self, eta):
        """Partial sum ``sum_{m<=order} eta^m i^m z_m`` (real up to roundoff)."""
        return complex(sum((eta**m) * (1j**m) * zm for m, zm in enumerate(self.z)))


def _get(seq, j, n):
    return seq[j] if 0 <= j < len(seq) else np.zeros(n)


def _order_residual(st, m, pc_fields):
    """Order-``m`` equation with the ``tau^2 K_c psi_m`` term left out."""
    f = st.forms
    n = f.geom.n_dofs
    full = st.psi

    def pc(j):
        return _get(pc_fields, j, n)

    def q(j):
        return _get(full, j, n)

    t2 = st.tau**2
    r = -t2 * (f.S_c @ pc(m - 1) - f.M_c @ pc(m - 2))
    r += st.sign * (f.K_p @ q(m - 2) + f.S_p @ q(m - 3) - f.M_p @ q(m - 4))
    acc = np.zeros(n)
    for ell in range(0, m - 1):
        acc += st.z[ell] * q(m - 2 - ell)
    r -= f.M_q @ acc
    return r


def _check_defects(st, r, order):
    f = st.forms
    scale = max(np.abs(r).sum(), np.finfo(float).tiny)
    interior = np.abs(r[f.pi]).sum() / scale
    total = abs(r.sum()) / scale
    st.defects.append(("inclusion", order, float(interior)))
    st.defects.append(("solvability", order, float(total)))
    if interior > DEFECT_TOL:
        raise HierarchyError("inclusion", order, interior)
    if total > DEFECT_TOL:
        raise HierarchyError("solvability", order, total)


def _solve_complement(st, r, order):
    f = st.forms
    rhs = np.zeros_like(r)
    rhs[f.pc] = r[f.pc]
    try:
        return f.neumann_solver().solve(rhs / st.tau**2)
    except SolvabilityError as exc:
        raise HierarchyError("complement", order, exc.defect) from exc


def init_base(forms, spectrum, zeta0, tau, sign=1, branch=0, order=10, epsilon=None):
    """Order-two state: ``psi0`` on Q, ``psi1`` and ``psi2`` on Pc, and ``psi_star``.

    Parameters
    ----------
    forms : FormSet
    spectrum : DirichletSpectrum
        Used for the resonance check and spectral cross-checks.
    zeta0 : float
        Must satisfy the discrete dispersion relation to about 1e-8; use
        :meth:`DispersionRelation.refine`.
    tau : float
        Positive reduced wavenumber.
    epsilon : float, optional
        Resonance exclusion, default ``1e-3 * nu_1``.
    """
    if not tau > 0:
        raise ConfigError("the series hierarchy needs tau > 0")
    if order < 2:
        raise ConfigError("truncation order must be at least 2")
    eps = 1e-3 * spectrum.values[0] if epsilon is None else epsilon
    check_resonance(spectrum, zeta0, sign, eps)
    st = SeriesSolution(sign=sign, tau=float(tau), zeta0=float(zeta0),
                        direction=tuple(float(x) for x in forms.direction), branch=branch,
                        order=order, forms=forms)
    psi0 = solve_psi0(forms, zeta0, sign)
    st.psi = [psi0]
    st.psi_tilde = [np.zeros_like(psi0)]
    st.z = [float(zeta0)]
    st.psi_star = solve_psi_star(forms, zeta0, psi0, sign)
    st.divisor = forms.q_mean(psi0) + zeta0 * forms.p_mean(st.psi_star)
    st.divisor_spectral = (spectral_sum(spectrum, zeta0, "solvability_const", sign, epsilon=eps)[0]
                           + spectrum.parseval_remainder)

    geom = forms.geom
    mp = forms.M_p
    spec_psi0, _ = spectral_sum(spectrum, zeta0, "psi0", sign, geom, epsilon=eps)
    spec_star, _ = spectral_sum(spectrum, zeta0, "psi_star", sign, geom, epsilon=eps)

    def rel(a, b):
        d = a - b
        return float(np.sqrt(d @ (mp @ d)) / max(np.sqrt(b @ (mp @ b)), np.finfo(float).tiny))

    st.spectral_check = {"psi0": rel(spec_psi0, psi0), "psi_star": rel(spec_star, st.psi_star)}

    psi1 = solve_psi1(forms)
    pc_fields = [psi0, psi1]
    r = _order_residual(st, 2, pc_fields)
    _check_defects(st, r, 2)
    pc_fields.append(_solve_complement(st, r, 2))
    st.complement_ahead = pc_fields[1:]
    return st


def advance(st):
    """Complete ``psi_k`` in P and ``z_k``, then solve ``psi_{k+2}`` in Pc.

    ``k`` is the number of completed coefficients. The inclusion problem is
    solved first without the ``z_k`` term (``psi_tilde_k``); ``z_k`` then
    follows from the total of the order ``k + 2`` equation, whose only
    dependence on it is through ``psi_star`` and ``psi0``.
    """
    f = st.forms
    k = len(st.psi)
    n = f.geom.n_dofs
    pc_fields = list(st.psi) + list(st.complement_ahead)
    trace = pc_fields[k][f.gamma]

    rhs = -st.sign * (f.S_p @ _get(st.psi, k - 1, n)) + st.sign * (f.M_p @ _get(st.psi, k - 2, n))
    acc = np.zeros(n)
    for ell in range(1, k):
        acc += st.z[ell] * st.psi[k - ell]
    rhs += f.M_p @ acc
    tilde = f.solve_inclusion(st.sign, st.zeta0, rhs, trace)
    tilde[f.pc] = pc_fields[k][f.pc]

    st.psi.append(tilde.copy())
    st.z.append(0.0)
    r0 = _order_residual(st, k + 2, pc_fields)
    zk = r0.sum() / st.divisor
    st.psi[k] = tilde + zk * st.psi_star
    st.z[k] = float(zk)
    st.psi_tilde.append(tilde)

    r = _order_residual(st, k + 2, pc_fields)
    _check_defects(st, r, k + 2)
    new = _solve_complement(st, r, k + 2)
    st.complement_ahead = [pc_fields[k + 1], new]
    return st


def run_hierarchy(forms, spectrum, zeta0, tau, sign=1, order=10, branch=0, epsilon=None):
    """Coefficients ``psi_m``, ``zeta_m`` for ``m <= order``.

    Returns
    -------
    SeriesSolution
    """
    st = init_base(forms, spectrum, zeta0, tau, sign, branch, order, epsilon)
    while len(st.psi) <= order:
        advance(st)
    return st
