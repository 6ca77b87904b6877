"""Direct finite-eta Bloch solves used as an independent check of the series.

At quasi-staticity ``eta`` the discrete cell problem is the Hermitian pencil

    (tau^2 / eta^2) H_c(eta) u + sign H_p(eta) u = zeta M_q u,
    H(eta) = K + i eta S + eta^2 M,

built from the same matrices as the series hierarchy. The eigenpair nearest
a target is found by shift-invert Lanczos and then polished by Newton steps
whose residuals are accumulated in extended precision, so that differences
between series and direct frequencies can be resolved far below 1e-10.
"""
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .exceptions import ConfigError, TrackingError

ETA_MAX = 0.5
TRACKING_WINDOW = 0.5
CSV_COLUMNS = ("eta", "M", "zeta_series", "zeta_direct", "abs_err", "field_err", "residual")


def bloch_operators(forms, eta, tau, sign=1):
    """Complex pencil ``(A, B)`` at quasi-staticity ``eta`` (``A`` divided by ``eta^2``)."""
    def h(K, S, M):
        return K + (1j * eta) * S + (eta * eta) * M

    hc = h(forms.K_c, forms.S_c, forms.M_c)
    hp = h(forms.K_p, forms.S_p, forms.M_p)
    A = ((tau * tau) / (eta * eta)) * hc + sign * hp
    return sp.csr_matrix(A), sp.csr_matrix(forms.M_q, dtype=complex)


@dataclass(eq=False)
class DirectSolve:
    """Eigenpair of the finite-eta pencil.

    Attributes
    ----------
    zeta : float
        Real part of the Rayleigh quotient.
    imag_part : float
        Imaginary part of the Rayleigh quotient; roundoff for a Hermitian pencil.
    field : ndarray of complex
        Bloch field normalised so that its integral over Pc equals ``|Pc|``.
    residual : float
        ``||(A - zeta B) u|| / (||A u|| + |zeta| ||B u||)`` in extended precision.
    """

    eta: float
    tau: float
    direction: tuple
    sign: int
    target: float
    zeta: float
    imag_part: float
    field: np.ndarray = field(repr=False)
    residual: float = 0.0
    newton_steps: int = 0


def _extended(matrix):
    return sp.csr_matrix(matrix).astype(np.clongdouble)


class _DifferenceStiffness:
    """Stiffness action ``(K u)_i = sum_j K_ij (u_j - u_i)`` over off-diagonal entries.

    The difference form annihilates constants exactly, which the assembled
    diagonal does only up to roundoff; after division by ``eta^2`` that
    roundoff would otherwise dominate frequency differences.
    """

    def __init__(self, matrix):
        coo = sp.coo_matrix(matrix)
        off = coo.row != coo.col
        self.row = coo.row[off]
        self.col = coo.col[off]
        self.val = coo.data[off].astype(np.longdouble)
        self.n = matrix.shape[0]

    def __matmul__(self, u):
        out = np.zeros(self.n, dtype=np.clongdouble)
        np.add.at(out, self.row, self.val * (u[self.col] - u[self.row]))
        return out


class _ExtendedPencil:
    """Extended-precision action of ``A`` and ``B`` from :func:`bloch_operators`."""

    def __init__(self, forms, eta, tau, sign):
        self.lap_c = _DifferenceStiffness(forms.K_c)
        self.lap_p = _DifferenceStiffness(forms.K_p)
        self.S_c, self.S_p = _extended(forms.S_c), _extended(forms.S_p)
        self.M_c, self.M_p = _extended(forms.M_c), _extended(forms.M_p)
        self.B = _extended(forms.M_q)
        self.eta = np.longdouble(eta)
        self.scale = np.longdouble(tau) ** 2 / self.eta**2
        self.sign = sign

    def _h(self, lap, S, M, u):
        return lap @ u + (1j * self.eta) * (S @ u) + self.eta**2 * (M @ u)

    def apply_a(self, u):
        return (self.scale * self._h(self.lap_c, self.S_c, self.M_c, u)
                + self.sign * self._h(self.lap_p, self.S_p, self.M_p, u))

    def apply_b(self, u):
        return self.B @ u

    def rayleigh(self, u):
        return np.vdot(u, self.apply_a(u)) / np.vdot(u, self.apply_b(u))


def direct_bloch_solve(forms, eta, tau, sign=1, target=None, count=4, newton_steps=6):
    """Eigenvalue of the finite-eta cell problem nearest ``target``.

    Parameters
    ----------
    forms : FormSet
    eta : float
        Quasi-staticity, ``0 < eta <= 0.5``.
    tau : float
    sign : {1, -1}
    target : float
        Usually the leading-order frequency ``zeta0``.
    count : int
        Number of Lanczos eigenpairs requested around the target.
    newton_steps : int
        Maximum number of extended-precision Newton corrections.

    Returns
    -------
    DirectSolve

    Raises
    ------
    TrackingError
        When no eigenvalue lies within 50% of the target.
    """
    if not 0 < eta <= ETA_MAX:
        raise ConfigError(f"eta must lie in (0, {ETA_MAX}]")
    if target is None:
        raise ConfigError("a target frequency is required")
    A, B = bloch_operators(forms, eta, tau, sign)
    n = A.shape[0]
    k = min(count, n - 2)
    vals, vecs = spla.eigsh(A, k=k, M=B, sigma=target, which="LM",
                            v0=np.ones(n, dtype=complex))
    j = int(np.argmin(np.abs(vals - target)))
    zeta = float(np.real(vals[j]))
    window = TRACKING_WINDOW * max(abs(target), np.finfo(float).tiny)
    if abs(zeta - target) > window:
        raise TrackingError(f"no eigenvalue within 50% of {target:.6g} (nearest {zeta:.6g})")

    u = vecs[:, j]
    w = forms.M_c @ forms.ones
    u = u * (w @ forms.ones) / (w @ u)

    pencil = _ExtendedPencil(forms, eta, tau, sign)
    wl = w.astype(np.longdouble)
    area = np.longdouble(w @ forms.ones)
    ul = u.astype(np.clongdouble)
    zl = np.clongdouble(zeta)
    # bordered Jacobian of (A - zeta B) u = 0, w.u = |Pc|, factored once
    lu = spla.splu(sp.bmat([[A - zeta * B, sp.csr_matrix((B @ u)[:, None]) * -1.0],
                            [sp.csr_matrix(w[None, :]), None]], format="csc"))
    steps = 0
    for steps in range(1, newton_steps + 1):
        r = pencil.apply_a(ul) - zl * pencil.apply_b(ul)
        g = (wl @ ul) - area
        rhs = -np.concatenate([r, [g]]).astype(complex)
        d = lu.solve(rhs)
        ul = ul + d[:n].astype(np.clongdouble)
        zl = zl + np.clongdouble(d[n])
        if np.abs(d[:n]).max() <= 1e-17 * np.abs(u).max() and abs(d[n]) <= 1e-17 * abs(zeta):
            break
    rq = pencil.rayleigh(ul)
    au, bu = pencil.apply_a(ul), pencil.apply_b(ul)
    r = au - rq * bu
    scale = np.linalg.norm(au.astype(complex)) + abs(complex(rq)) * np.linalg.norm(bu.astype(complex))
    res = float(np.linalg.norm(r.astype(complex)) / scale)
    return DirectSolve(eta=float(eta), tau=float(tau), direction=tuple(float(x) for x in forms.direction),
                       sign=sign, target=float(target), zeta=float(np.real(rq)),
                       imag_part=float(np.imag(rq)), field=ul.astype(complex), residual=res,
                       newton_steps=steps)


@dataclass(eq=False)
class SeriesEvaluation:
    """Truncated series at one ``eta``."""

    order: int
    eta: float
    field: np.ndarray = field(repr=False)
    zeta: float = 0.0
    imag_part: float = 0.0


def evaluate_series(solution, eta, order=None, radius=None):
    """Partial sums ``sum_{m<=order} eta^m i^m psi_m`` and ``sum eta^m zeta_m``.

    Parameters
    ----------
    solution : SeriesSolution
    order : int, optional
        Truncation order, at most ``solution.order``.
    radius : float, optional
        Estimated convergence radius in ``eta``; a warning is issued beyond it.
    """
    m_max = solution.order if order is None else int(order)
    if not 0 <= m_max <= solution.order:
        raise ConfigError(f"truncation order must lie in [0, {solution.order}]")
    if radius is not None and abs(eta) >= radius:
        warnings.warn(f"eta={eta:g} is outside the estimated radius {radius:g}", RuntimeWarning,
                      stacklevel=2)
    n = solution.forms.geom.n_dofs
    u = np.zeros(n, dtype=complex)
    z = 0j
    for m in range(m_max + 1):
        c = (eta**m) * (1j**m)
        u += c * solution.psi[m]
        z += c * solution.z[m]
    return SeriesEvaluation(order=m_max, eta=float(eta), field=u, zeta=float(z.real), imag_part=float(z.imag))


def _h1_gram(forms):
    return (forms.K_c + forms.K_p + forms.M_q).tocsc()


def weakform_residual(forms, u, zeta, eta, tau, sign=1):
    """Dual H1 norm of ``v -> a(u, v)`` over the finite element space, relative to ``||u||_{H1}``.

    The form is ``tau^2 H_c + sign eta^2 H_p - eta^2 zeta M_q``; the dual
    norm ``sqrt(r^H G^{-1} r)`` uses the H1 Gram matrix ``G``. The residual
    vector is accumulated in extended precision.
    """
    pencil = _ExtendedPencil(forms, eta, tau, sign)
    ul = np.asarray(u).astype(np.clongdouble)
    r = np.longdouble(eta) ** 2 * (pencil.apply_a(ul) - np.longdouble(zeta) * pencil.apply_b(ul))
    r = r.astype(complex)
    G = _h1_gram(forms)
    lu = spla.splu(G)
    y = lu.solve(r.real) + 1j * lu.solve(r.imag)
    dual = np.sqrt(max(np.real(np.vdot(r, y)), 0.0))
    uc = np.asarray(u, dtype=complex)
    norm_u = np.sqrt(max(np.real(np.vdot(uc, G @ uc)), np.finfo(float).tiny))
    return float(dual / norm_u)


def align_fields(reference, other, mass):
    """Relative L2 distance after the best complex rescaling of ``other``.

    Returns
    -------
    error : float
        ``min_c ||c other - reference|| / ||reference||``.
    scale : complex
    """
    num = np.vdot(other, mass @ reference)
    den = np.vdot(other, mass @ other)
    c = num / den
    d = c * other - reference
    err = np.sqrt(np.real(np.vdot(d, mass @ d)) / np.real(np.vdot(reference, mass @ reference)))
    return float(err), complex(c)


def loglog_slope(x, y):
    """Least-squares slope of ``log y`` against ``log x``."""
    x = np.log(np.asarray(x, dtype=float))
    y = np.log(np.maximum(np.asarray(y, dtype=float), np.finfo(float).tiny))
    return float(np.polyfit(x, y, 1)[0])


@dataclass
class ConvergenceTable:
    """Per-``eta`` comparison of the truncated series with the direct solve."""

    order: int
    rows: list = field(default_factory=list)

    def column(self, name):
        return np.array([row[name] for row in self.rows])

    @property
    def zeta_slope(self):
        return loglog_slope(self.column("eta"), self.column("abs_err"))

    @property
    def residual_slope(self):
        return loglog_slope(self.column("eta"), self.column("residual"))

    def to_csv(self):
        lines = [",".join(CSV_COLUMNS)]
        for row in self.rows:
            lines.append(",".join("%d" % row[c] if c == "M" else "%.17g" % row[c] for c in CSV_COLUMNS))
        return "\n".join(lines) + "\n"


def convergence_study(solution, etas, order=None):
    """Compare series and direct solutions for each ``eta``.

    Parameters
    ----------
    solution : SeriesSolution
        Hierarchy run supplying ``forms``, ``tau``, ``sign`` and ``zeta0``.
    etas : sequence of float
    order : int, optional
        Truncation order of the series, default ``solution.order``.

    Returns
    -------
    ConvergenceTable
    """
    forms = solution.forms
    m = solution.order if order is None else int(order)
    table = ConvergenceTable(order=m)
    for eta in etas:
        ser = evaluate_series(solution, eta, m)
        direct = direct_bloch_solve(forms, eta, solution.tau, solution.sign, target=ser.zeta)
        ferr, _ = align_fields(ser.field, direct.field, forms.M_q)
        res = weakform_residual(forms, ser.field, ser.zeta, eta, solution.tau, solution.sign)
        table.rows.append({"eta": float(eta), "M": m, "zeta_series": ser.zeta, "zeta_direct": direct.zeta,
                           "abs_err": abs(ser.zeta - direct.zeta), "field_err": ferr, "residual": res})
    return table
