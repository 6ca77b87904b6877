"""Leading-order cell problems and the homogenized dispersion relation.

For a propagation direction ``k`` the first corrector ``psi1`` solves the
periodic Neumann problem ``-Lap psi1 = 0`` in Pc with ``(grad psi1 + k).n = 0``
on the inclusion boundary. It fixes the effective constant

    E(k) = int_Pc (k . grad psi1 + 1) = |Pc| - int_Pc |grad psi1|^2,

and the leading-order relation between reduced wavenumber ``tau`` and reduced
frequency ``zeta0`` reads

    tau^2 E = zeta0 S(zeta0),    S(zeta0) = int_Q psi0,

where ``psi0`` equals 1 in Pc and solves ``(sign Lap + zeta0) psi0 = 0`` in P.
Spectrally ``S = |Pc| + sum mu_n m_n^2 / (mu_n - sign zeta0)`` over the
nonzero-mean modes.
"""
from dataclasses import dataclass

import numpy as np

from .exceptions import InversionError, PoleError, SolvabilityError
from .spectrum import spectral_sum

MODES = ("spectral", "galerkin")


def solve_psi1(forms):
    """First corrector on the complement (zero mean, zero on interior-P dofs)."""
    rhs = -(forms.D_c.T @ forms.ones)
    return forms.neumann_solver().solve(rhs)


def effective_constant(forms, psi1=None):
    """``E = |Pc| + int_Pc k . grad psi1``.

    Returns
    -------
    E : float
    identity_gap : float
        ``E - (|Pc| - int |grad psi1|^2)``; zero up to roundoff.
    """
    psi1 = solve_psi1(forms) if psi1 is None else psi1
    area_pc = forms.geom.area("Pc")
    E = area_pc + float(forms.ones @ (forms.D_c @ psi1))
    other = area_pc - float(psi1 @ (forms.K_c @ psi1))
    return E, E - other


def solve_psi0(forms, zeta0, sign=1):
    """Inclusion field with unit boundary data: 1 in Pc, ``(sign K_p - zeta0 M_p) psi0 = 0`` in P."""
    rhs = np.zeros(forms.geom.n_dofs)
    psi0 = forms.solve_inclusion(sign, zeta0, rhs, np.ones(len(forms.gamma)))
    psi0[forms.pc] = 1.0
    return psi0


def solve_psi_star(forms, zeta0, psi0, sign=1):
    """Field absorbing frequency corrections: ``(sign K_p - zeta0 M_p) w = M_p psi0`` in P, 0 on the boundary."""
    rhs = forms.M_p @ psi0
    return forms.solve_inclusion(sign, zeta0, rhs, np.zeros(len(forms.gamma)))


def psi2_rhs(forms, tau2, zeta0, psi0, psi1, sign=1):
    """Right-hand side of ``tau^2 K_c psi2 = rhs`` on the complement dofs."""
    rhs = tau2 * (-(forms.S_c @ psi1) + forms.M_c @ psi0)
    rhs += sign * (forms.K_p @ psi0) - zeta0 * (forms.M_q @ psi0)
    out = np.zeros_like(rhs)
    out[forms.pc] = rhs[forms.pc]
    return out


def solve_psi2(forms, tau2, zeta0, psi0, psi1, sign=1, tol=1e-8):
    """Second corrector on the complement.

    Raises
    ------
    SolvabilityError
        When ``(tau2, zeta0)`` is off the dispersion curve, i.e. the
        right-hand side has a nonzero total.
    """
    rhs = psi2_rhs(forms, tau2, zeta0, psi0, psi1, sign)
    scale = max(np.abs(rhs).sum(), np.finfo(float).tiny)
    defect = abs(rhs.sum()) / scale
    if defect > tol:
        raise SolvabilityError("second corrector data are off the dispersion curve", defect)
    if tau2 == 0.0:
        # degenerate origin of the acoustic band: every forcing term vanishes
        if np.abs(rhs).max() > tol:
            raise SolvabilityError("zero wavenumber needs zero forcing", float(np.abs(rhs).max()))
        return np.zeros(forms.geom.n_dofs)
    return forms.neumann_solver().solve(rhs / tau2)


@dataclass(frozen=True)
class DispersionBranch:
    """One band ``[lower, upper)`` of the relation for a fixed direction.

    ``upper`` is the asymptote (a nonzero-mean eigenvalue) or ``inf`` for the
    single branch of a negative inclusion coefficient.
    """

    index: int
    sign: int
    direction: tuple
    effective_constant: float
    lower: float
    upper: float

    def contains(self, zeta0):
        return self.lower <= zeta0 < self.upper

    @staticmethod
    def from_physical(k, omega, c, gamma, d):
        """Map wavenumber, frequency, wave speed, contrast and period to ``(tau, zeta, eta)``."""
        return np.sqrt(gamma) * k, gamma * omega**2 / c**2, k * d


class DispersionRelation:
    """``tau^2(zeta0)`` for one direction and contrast sign.

    Parameters
    ----------
    spectrum : DirichletSpectrum
    forms : FormSet
        Supplies ``psi1`` and, in galerkin mode, the inclusion solves.
    sign : {1, -1}
    mode : {'spectral', 'galerkin'}
        ``'spectral'`` uses the truncated eigenfunction sum for ``S``, with
        the Parseval remainder added as a frequency-independent tail when
        ``static_tail`` is true. ``'galerkin'`` integrates the finite element
        ``psi0`` and is exact for the discrete cell problem.
    """

    def __init__(self, spectrum, forms, sign=1, mode="spectral", static_tail=True):
        if sign not in (1, -1):
            raise ValueError("sign must be +1 or -1")
        if mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        self.spectrum = spectrum
        self.forms = forms
        self.sign = sign
        self.mode = mode
        self.static_tail = static_tail
        self.psi1 = solve_psi1(forms)
        self.E, _ = effective_constant(forms, self.psi1)
        self._edges = None

    @property
    def poles(self):
        return self.spectrum.mu if self.sign > 0 else np.empty(0)

    def integral_psi0(self, zeta0):
        """``S(zeta0) = int_Q psi0``."""
        if self.mode == "galerkin":
            self._guard(zeta0)
            return self.forms.q_mean(solve_psi0(self.forms, zeta0, self.sign))
        value, _ = spectral_sum(self.spectrum, zeta0, "dispersion", self.sign)
        if self.static_tail:
            value += self.spectrum.parseval_remainder
        return value

    def _guard(self, zeta0):
        mu = self.poles
        if len(mu):
            d = np.abs(mu - zeta0) / mu
            j = int(np.argmin(d))
            if d[j] < 1e-9:
                raise PoleError("evaluation at a dispersion asymptote", float(mu[j]), float(abs(mu[j] - zeta0)))

    def tau_squared(self, zeta0):
        """``zeta0 S(zeta0) / E``; negative inside stop bands."""
        return zeta0 * self.integral_psi0(zeta0) / self.E

    def band_edges(self, count=None):
        """Lower band edges ``[0, mu*_1, ...]``, one per available asymptote."""
        if self.sign < 0:
            return np.array([0.0])
        mu = self.poles
        n = len(mu) if count is None else min(count, len(mu))
        if self._edges is None or len(self._edges) < n:
            edges = [0.0]
            for m in range(1, n):
                edges.append(self._root_of_S(mu[m - 1], mu[m]))
            self._edges = np.array(edges)
        return self._edges[:n]

    def _root_of_S(self, lo, hi):
        a, b = lo * (1 + 1e-8), hi * (1 - 1e-8)
        fa, fb = self.integral_psi0(a), self.integral_psi0(b)
        if not (fa < 0 < fb):
            raise InversionError(f"no band edge bracketed in ({lo:.6g}, {hi:.6g})")
        for _ in range(200):
            mid = 0.5 * (a + b)
            fm = self.integral_psi0(mid)
            if fm == 0.0:
                return mid
            if fm < 0:
                a = mid
            else:
                b = mid
            if b - a <= 4 * np.finfo(float).eps * b:
                break
        return 0.5 * (a + b)

    def branch(self, m):
        """Band ``m`` (0-based; ``m = 0`` starts at the origin)."""
        d = tuple(float(x) for x in self.forms.direction)
        if self.sign < 0:
            if m != 0:
                raise InversionError("a negative inclusion coefficient has a single branch")
            return DispersionBranch(0, -1, d, self.E, 0.0, np.inf)
        mu = self.poles
        if m < 0 or m >= len(mu):
            raise InversionError(f"branch {m} needs more nonzero-mean modes (have {len(mu)})")
        edges = self.band_edges(m + 1)
        return DispersionBranch(m, 1, d, self.E, float(edges[m]), float(mu[m]))

    def invert_branch(self, m, tau, bracket=None, rtol=1e-13):
        """Reduced frequency on branch ``m`` with ``tau_squared = tau^2`` (bisection).

        Parameters
        ----------
        bracket : (float, float), optional
            Sub-interval of the band known to contain the root.
        """
        if tau < 0 or not np.isfinite(tau):
            raise InversionError("tau must be finite and non-negative")
        br = self.branch(m)
        target = tau * tau
        if target == 0.0:
            return br.lower
        if bracket is None:
            a = br.lower
            if np.isfinite(br.upper):
                b = br.upper * (1 - 2e-9)
                if self.tau_squared(b) < target:
                    raise InversionError("tau^2 above the range reachable before the asymptote")
            else:
                b = max(1.0, 2 * target * self.E)
                while self.tau_squared(b) < target:
                    b *= 2
                    if b > 1e12:
                        raise InversionError("no root found on the negative-sign branch")
        else:
            a, b = bracket
        fa, fb = self.tau_squared(a) - target, self.tau_squared(b) - target
        if fa > 0 or fb < 0:
            raise InversionError("bracket does not contain the requested tau")
        for _ in range(300):
            mid = 0.5 * (a + b)
            f = self.tau_squared(mid) - target
            if f == 0:
                return mid
            if f < 0:
                a = mid
            else:
                b = mid
            if b - a <= rtol * max(abs(b), 1e-300):
                break
        return 0.5 * (a + b)

    def refine(self, m, tau, zeta_guess, rtol=1e-14):
        """Galerkin-mode root near ``zeta_guess``; bracket grows geometrically."""
        galerkin = DispersionRelation.__new__(DispersionRelation)
        galerkin.__dict__.update(self.__dict__)
        galerkin.mode = "galerkin"
        br = self.branch(m)
        target = tau * tau
        if target == 0.0:
            return br.lower
        delta = 1e-4
        for _ in range(60):
            a = max(br.lower, zeta_guess * (1 - delta))
            b = min(br.upper * (1 - 2e-9), zeta_guess * (1 + delta)) if np.isfinite(br.upper) \
                else zeta_guess * (1 + delta)
            if galerkin.tau_squared(a) <= target <= galerkin.tau_squared(b):
                return galerkin.invert_branch(m, tau, bracket=(a, b), rtol=rtol)
            delta *= 2
        raise InversionError("could not bracket the discrete dispersion root")
