"""A-priori constants, majorant recursions and radius-of-convergence estimates.

The scaled coefficient norms of a hierarchy run,

    p_bar_m = tau^m ||psi_m||_{H1(Pc)},   p_m = tau^m ||psi_m||_{H1(P)},
    p_tilde_m = tau^m ||psi_tilde_m||_{H1(P)},   s_m = tau^m |zeta_m|,

obey a system of linear-plus-convolution inequalities whose constants come
from three operator bounds on the discrete spaces:

* ``omega``: Poincare constant of zero-mean fields on Pc,
  ``||u||_{H1} <= omega ||grad u||``;
* ``A``: norm of the ``H1``-minimal extension from Pc into P;
* ``C_nu``: resolvent bound ``max_j sqrt(1 + nu_j) / |nu - nu_j|``.

Replacing the inequalities by equalities gives majorant sequences
``a_hat, b_hat, c_hat, d_hat`` that dominate the norms term by term.
"""
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as la
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigError, ResonanceError
from .fem import eigensolve


def poincare_constant(forms):
    """``omega = sqrt(1 + 1/lambda_1)`` with ``lambda_1`` the first nonzero Neumann eigenvalue on Pc.

    Returns
    -------
    omega : float
    lambda1 : float
    """
    shift = -1e-3
    vals, _ = eigensolve(forms.K_c, forms.M_c, 2, shift=shift, dofs=forms.pc)
    lam1 = float(vals[1])
    if not lam1 > 0:
        raise ConfigError("complement is disconnected or degenerate (no positive Neumann eigenvalue)")
    return float(np.sqrt(1.0 + 1.0 / lam1)), lam1


def _schur(G, keep, elim):
    gkk = G[keep][:, keep].toarray()
    if len(elim) == 0:
        return gkk
    gke = G[keep][:, elim]
    gee = sp.csc_matrix(G[elim][:, elim])
    lu = spla.splu(gee)
    x = lu.solve(gke.T.toarray())
    return gkk - gke @ x


def extension_constant(forms):
    """Norm of the discrete extension operator from Pc into P.

    The minimal-``H1(P)`` extension of a trace solves ``(K_p + M_p) e = 0``
    at interior dofs; the minimal ``H1(Pc)`` norm of a field with that trace
    is given by the Schur complement of ``K_c + M_c``. The operator norm is
    the square root of the top generalized eigenvalue of the two Schur
    complements on the interface.

    Returns
    -------
    A : float
    residual : float
        Relative residual of the extremal eigenpair.
    """
    gamma = forms.gamma
    gp = (forms.K_p + forms.M_p).tocsr()
    gc = (forms.K_c + forms.M_c).tocsr()
    s_p = _schur(gp, gamma, forms.pi)
    elim_c = np.setdiff1d(forms.pc, gamma)
    s_c = _schur(gc, gamma, elim_c)
    s_p = 0.5 * (s_p + s_p.T)
    s_c = 0.5 * (s_c + s_c.T)
    vals, vecs = la.eigh(s_p, s_c)
    v = vecs[:, -1]
    lam = vals[-1]
    res = np.linalg.norm(s_p @ v - lam * (s_c @ v)) / max(np.linalg.norm(s_p @ v), np.finfo(float).tiny)
    return float(np.sqrt(lam)), float(res)


def resolvent_constant(values, nu, epsilon=0.0):
    """``C_nu = max_j sqrt(1 + nu_j) / |nu - nu_j|`` over a Dirichlet spectrum.

    Each term decreases in ``nu_j`` once ``nu_j > nu``, so the maximum over
    the computed modes is exact whenever ``nu`` lies below the last one.

    Raises
    ------
    ResonanceError
        ``nu`` within ``epsilon`` of an eigenvalue.
    ConfigError
        ``nu`` not below the highest computed eigenvalue.
    """
    values = np.asarray(values, dtype=float)
    dist = np.abs(nu - values)
    j = int(np.argmin(dist))
    if dist[j] <= epsilon or dist[j] == 0.0:
        raise ResonanceError("resolvent evaluated inside the resonance exclusion",
                             float(values[j]), float(dist[j]))
    if nu >= values[-1]:
        raise ConfigError("resolvent bound needs eigenvalues above nu; increase n_modes")
    return float(np.max(np.sqrt(1.0 + values) / dist))


def _psi_star_norm_spectral(spectrum, zeta0, sign):
    """``||psi_star||_{H1(P)}`` from the eigenfunction expansion, with Parseval tail."""
    mu, m = spectrum.mu, spectrum.mu_means
    d = mu - sign * zeta0
    main = np.sum((1.0 + mu) * mu**2 * m**2 / d**4)
    nu_n = spectrum.values[-1]
    gap = nu_n - sign * zeta0
    tail = spectrum.parseval_remainder * (1.0 + nu_n) / nu_n**2 * (nu_n / gap) ** 4 if gap > 0 else np.inf
    return float(np.sqrt(main + tail))


def _k_tau(C, A, mu_m):
    return max(C, A * (C * abs(1.0 + mu_m) + 1.0))


@dataclass
class BoundState:
    """Constants of the majorant system for one branch point."""

    sign: int
    tau: float
    zeta0: float
    omega: float
    lambda1: float
    A: float
    A_residual: float
    area_pc: float
    K: float
    C_zeta: float
    K_tau: float
    B_tau: float
    epsilon: float
    envelope: dict = field(default_factory=dict)
    psi_star_majorant: float = None


def assemble_constants(forms, spectrum, sign, zeta0, tau, branch=None, relation=None,
                       psi_star_norm=None, epsilon=None, tau_max=None, n_samples=400):
    """Collect every constant of the majorant system.

    Parameters
    ----------
    forms : FormSet
    spectrum : DirichletSpectrum
        Finite element spectrum of the same mesh, so the resolvent bound is
        exact for the discrete problem.
    sign : {1, -1}
    zeta0, tau : float
        Branch point.
    branch : DispersionBranch, optional
        Needed for the positive sign (asymptote ``mu_m``, band edge).
    relation : DispersionRelation, optional
        Enables the ``tau``-envelopes ``K_tau <= C1 tau^2 + C2`` and
        ``||psi_star|| <= (B1 tau^2 + B2)^2`` (positive sign).
    psi_star_norm : float, optional
        Computed ``||psi_star||_{H1(P)}``; used as the sharp ``B_tau``.
    epsilon : float, optional
        Resonance exclusion around zero-mean eigenvalues, default ``1e-3 nu_1``.
    tau_max : float, optional
        Upper wavenumber for the envelopes, default ``max(2, tau)``.
    """
    eps = 1e-3 * spectrum.values[0] if epsilon is None else float(epsilon)
    omega, lam1 = poincare_constant(forms)
    A, a_res = extension_constant(forms)
    area_pc = forms.geom.area("Pc")
    # the frequency-correction divisor is at least |Pc|
    K = omega**2 * max(1.0, A) / area_pc
    values = spectrum.values
    if sign > 0:
        if branch is None:
            raise ConfigError("positive sign needs the dispersion branch")
        C = resolvent_constant(values, zeta0, eps)
        K_tau = _k_tau(C, A, branch.upper)
        B_tau = _psi_star_norm_spectral(spectrum, zeta0, 1) if psi_star_norm is None else psi_star_norm
    else:
        C, K_tau, B_tau = negative_constants(values, spectrum, A)
    state = BoundState(sign=sign, tau=float(tau), zeta0=float(zeta0), omega=omega, lambda1=lam1, A=A,
                       A_residual=a_res, area_pc=area_pc, K=K, C_zeta=C, K_tau=K_tau, B_tau=B_tau,
                       epsilon=eps)
    if sign > 0 and relation is not None:
        tmax = max(2.0, float(tau)) if tau_max is None else float(tau_max)
        state.envelope = tau_envelopes(relation, spectrum, A, branch, tmax, eps, n_samples)
        env = state.envelope
        state.psi_star_majorant = (env["B1"] * tau**2 + env["B2"]) ** 2
    return state


def negative_constants(values, spectrum, A):
    """``tau``-independent ``(C0, K_neg, B_neg)`` for a negative inclusion coefficient.

    The extension term carries ``|1 - zeta0|``, which is only bounded once
    ``zeta0`` is capped; the cap is the highest computed eigenvalue.
    """
    values = np.asarray(values, dtype=float)
    cap = values[-1]
    C0 = float(np.max(np.sqrt(1.0 + values) / values))
    # sup over 0 <= zeta0 <= cap of |1 - zeta0| / (nu_j + zeta0) is attained at an end point
    factor = np.maximum(1.0 / values, (cap - 1.0) / (values + cap))
    ext = float(np.max(np.sqrt(1.0 + values) * factor))
    K_neg = max(C0, A * (ext + 1.0))
    B_neg = _psi_star_norm_spectral(spectrum, 0.0, -1)
    return C0, K_neg, B_neg


def tau_envelopes(relation, spectrum, A, branch, tau_max, epsilon, n_samples=400):
    """Affine-in-``tau^2`` envelopes for ``K_tau`` and ``sqrt(||psi_star||)`` along a band.

    Samples run from the band edge to the frequency reached at ``tau_max``;
    eps-neighbourhoods of zero-mean eigenvalues are cut out and their end
    points sampled, where the resolvent bound peaks.
    ``C1 = K_tau(tau_max) / tau_max^2`` and ``C2`` is the smallest constant
    making ``K_tau <= C1 tau^2 + C2`` at every sample; likewise ``B1, B2``.
    """
    lo = branch.lower
    hi = relation.invert_branch(branch.index, tau_max)
    zs = np.linspace(lo, hi, n_samples)
    cuts = [mp for mp in spectrum.mu_prime if lo - epsilon < mp < hi + epsilon]
    for mp in cuts:
        zs = zs[np.abs(zs - mp) >= epsilon]
        zs = np.concatenate([zs, [z for z in (mp - epsilon, mp + epsilon) if lo <= z <= hi]])
    zs = np.sort(zs)
    ks, bs, t2 = [], [], []
    for z in zs:
        C = resolvent_constant(spectrum.values, z, 0.0)
        ks.append(_k_tau(C, A, branch.upper))
        bs.append(np.sqrt(_psi_star_norm_spectral(spectrum, z, 1)))
        t2.append(max(relation.tau_squared(z), 0.0))
    ks, bs, t2 = map(np.asarray, (ks, bs, t2))
    C1 = ks[-1] / tau_max**2
    C2 = max(float(np.max(ks - C1 * t2)), 0.0)
    B1 = bs[-1] / tau_max**2
    B2 = max(float(np.max(bs - B1 * t2)), 0.0)
    return {"C1": float(C1), "C2": C2, "B1": float(B1), "B2": B2, "tau_max": tau_max,
            "n_samples": len(zs), "excised": [float(c) for c in cuts]}


def run_majorants(K, K_tau, B_tau, tau, zeta0, seeds, order):
    """Majorant sequences with the norm inequalities taken as equalities.

    Parameters
    ----------
    K, K_tau, B_tau : float
    tau, zeta0 : float
    seeds : dict
        ``p_bar0``, ``p_bar1``, ``p0`` from a hierarchy run.
    order : int

    Returns
    -------
    dict of ndarray
        ``a_hat`` (length ``order + 2``), ``b_hat``, ``c_hat``, ``d_hat``
        (length ``order + 1``).
    """
    n = order + 2
    a = np.zeros(n + 1)
    b = np.zeros(n)
    c = np.zeros(n)
    d = np.zeros(n)
    z0 = abs(zeta0)
    t, t2 = tau, tau * tau

    def g(seq, j):
        return seq[j] if j >= 0 else 0.0

    a[0], a[1] = seeds["p_bar0"], seeds["p_bar1"]
    b[0], c[0], d[0] = 0.0, z0, seeds["p0"]
    for m in range(1, order + 1):
        conv = sum(c[l] * (g(a, m - 1 - l) + g(d, m - 1 - l)) for l in range(0, m))
        a[m + 1] = K * (2 * t * a[m] + t2 * g(a, m - 1) + g(d, m - 1) + 2 * t * g(d, m - 2)
                        + t2 * g(d, m - 3) + conv)
        conv_b = sum(c[l] * g(d, m - l) for l in range(1, m))
        b[m] = K_tau * (a[m] + 2 * t * g(d, m - 1) + t2 * g(d, m - 2) + conv_b)
        conv_c = sum(c[l] * (g(a, m - l) + g(d, m - l)) for l in range(1, m))
        c[m] = K * (z0 * b[m] + t * a[m + 1] + t2 * a[m] + t * g(d, m - 1) + t2 * g(d, m - 2) + conv_c)
        d[m] = b[m] + B_tau * c[m]
    return {"a_hat": a[:order + 2], "b_hat": b[:order + 1], "c_hat": c[:order + 1], "d_hat": d[:order + 1]}


def run_shifted(K, K_tau, B_tau, tau, zeta0, seeds, order):
    """Index-shifted form ``a_m = a_hat_m``, ``(b, c, d)_m = (b_hat, c_hat, d_hat)_{m-1}``.

    Implemented from the shifted recursion directly, as an independent check
    of :func:`run_majorants`.
    """
    n = order + 3
    a, b, c, d = (np.zeros(n) for _ in range(4))
    z0 = abs(zeta0)
    t, t2 = tau, tau * tau

    def g(seq, j):
        return seq[j] if j >= 0 else 0.0

    a[0], a[1] = seeds["p_bar0"], seeds["p_bar1"]
    b[1], c[1], d[1] = 0.0, z0, seeds["p0"]
    for m in range(2, order + 2):
        a[m] = K * (2 * t * a[m - 1] + t2 * g(a, m - 2) + d[m - 1] + 2 * t * g(d, m - 2) + t2 * g(d, m - 3)
                    + sum(c[l] * (g(a, m - 1 - l) + d[m - l]) for l in range(1, m)))
        b[m] = K_tau * (a[m - 1] + 2 * t * d[m - 1] + t2 * g(d, m - 2)
                        + sum(c[l] * d[m + 1 - l] for l in range(2, m)))
        c[m] = K * (z0 * b[m] + t * a[m] + t2 * a[m - 1] + t * d[m - 1] + t2 * g(d, m - 2)
                    + sum(c[l] * (a[m - l] + d[m + 1 - l]) for l in range(2, m)))
        d[m] = b[m] + B_tau * c[m]
    return {"a": a[:order + 2], "b": b[:order + 2], "c": c[:order + 2], "d": d[:order + 2]}


def domination(norms, majorants, order, rtol=1e-12):
    """Per-order flags ``p_bar <= a_hat``, ``p_tilde <= b_hat``, ``s <= c_hat``, ``p <= d_hat``."""
    pairs = (("p_bar", "a_hat"), ("p_tilde", "b_hat"), ("s", "c_hat"), ("p", "d_hat"))
    flags = np.ones(order + 1, dtype=bool)
    detail = {}
    for nk, mk in pairs:
        x = np.asarray(norms[nk])[:order + 1]
        y = np.asarray(majorants[mk])[:order + 1]
        ok = x <= y * (1 + rtol) + 1e-300
        detail[nk] = ok
        flags &= ok
    return flags, detail


def defining_functions(x, z, K, K_tau, B_tau, tau, zeta0, a0, a1, b1, c1, d1):
    """Values of the four generating-function equations at ``x = (alpha, beta, gamma, delta)``."""
    al, be, ga, de = x
    t, t2 = tau, tau * tau
    A_ = -(al - a1) + K * (2 * t * z * al + t2 * z * (z * al + a0) + (z + 2 * t * z**2 + t2 * z**3) * de
                           + z * ga * (z * al + a0) + z * ga * de)
    B_ = -(be - b1) + K_tau * (z * al + (2 * t * z + t2 * z**2) * de + (ga - c1) * (de - d1))
    C_ = -(ga - c1) + K * (t * (al - a1) + zeta0 * (be - b1) + t2 * z * al + (t * z + t2 * z**2) * de
                           + z * (ga - c1) * al + (ga - c1) * (de - d1))
    D_ = -(de - d1) + (be - b1) + B_tau * (ga - c1)
    return np.array([A_, B_, C_, D_])


def jacobian(K, K_tau, B_tau, tau, zeta0, gamma_offset=0.0, delta_offset=0.0):
    """Jacobian of :func:`defining_functions` in ``(alpha, beta, gamma, delta)`` at ``z = 0``.

    ``gamma_offset`` and ``delta_offset`` are ``gamma - c1`` and ``delta - d1``.
    """
    gc, dd = gamma_offset, delta_offset
    return np.array([
        [-1.0, 0.0, 0.0, 0.0],
        [0.0, -1.0, K_tau * dd, K_tau * gc],
        [K * tau, K * zeta0, -1.0 + K * dd, K * gc],
        [0.0, 1.0, B_tau, -1.0],
    ])


def jacobian_determinant_check(state, gamma_offset=0.0, delta_offset=0.0):
    """Determinant of the generating-system Jacobian at the base point (1 when offsets vanish)."""
    J = jacobian(state.K, state.K_tau, state.B_tau, state.tau, abs(state.zeta0), gamma_offset, delta_offset)
    return float(np.linalg.det(J))


@dataclass(frozen=True)
class RadiusEstimate:
    """Growth fit ``x_m ~ C J^m``; ``radius = 1/J`` in ``rho = eta / tau``."""

    growth: float
    radius: float
    radius_eta: float
    r_squared: float
    orders: tuple


def estimate_radius(sequence, window=6, tau=1.0):
    """Least-squares growth rate over the trailing ``window`` nonzero terms.

    Raises
    ------
    ValueError
        Fewer than ``window`` (at least 6) positive terms.
    """
    x = np.asarray(sequence, dtype=float)
    idx = np.nonzero(x > 0)[0]
    window = max(int(window), 6)
    if len(idx) < window:
        raise ValueError(f"need at least {window} nonzero terms, got {len(idx)}")
    m = idx[-window:]
    y = np.log(x[m])
    slope, intercept = np.polyfit(m, y, 1)
    fit = slope * m + intercept
    ss_res = float(np.sum((y - fit) ** 2))
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    # a constant window (growth 1) leaves only roundoff in both sums
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 1e-20 * max(1.0, float(np.sum(y * y))) else 1.0
    J = float(np.exp(slope))
    return RadiusEstimate(growth=J, radius=1.0 / J, radius_eta=tau / J, r_squared=r2,
                          orders=tuple(int(i) for i in m))
