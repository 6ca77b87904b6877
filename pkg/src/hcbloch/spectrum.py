"""Dirichlet spectrum of the Laplacian on the inclusion.

Eigenpairs ``(nu_j, phi_j)`` of ``-Lap phi = nu phi`` in P with ``phi = 0`` on
the boundary are split by whether the mode has a nonzero average over P.
Only nonzero-mean modes couple to the matrix at leading order, so they carry
the poles of the dispersion relation; zero-mean modes are resonances that
the series construction must avoid.

Two backends are available: finite elements on the cell mesh, and the
closed-form Bessel solution for a disk (``nu = (j_{k,i}/r)^2``).
"""
from dataclasses import dataclass, field, replace

import numpy as np
from scipy import special

from .exceptions import BackendError, PoleError, ResonanceError
from .fem import FormSet, eigensolve
from .geometry import Disk

BACKENDS = ("fem", "bessel")
KINDS = ("psi0", "psi_star", "solvability_const", "dispersion")

# Default mean thresholds. Analytic means are exact zeros; FEM means of
# symmetric zero-mean modes are O(nu h^2), about 1e-2 at h = 1/64.
DEFAULT_THETA = {"bessel": 1e-6, "fem": 3e-2}
CLUSTER_GAP = 1e-6


@dataclass(frozen=True, eq=False)
class DirichletSpectrum:
    """Dirichlet eigenpairs on the inclusion with mean classification.

    Attributes
    ----------
    values : ndarray
        Ascending eigenvalues ``nu_j``.
    means : ndarray
        ``int_P phi_j`` with unit ``L2(P)`` normalization.
    nonzero_mean : ndarray of bool
    theta : float
        Classification threshold relative to ``sqrt(|P|)``.
    backend : str
    area_p : float
        ``|P|`` for the backend (mesh area or exact area).
    vectors : ndarray or None
        FEM eigenvectors on reduced dofs, one column per mode.
    orders : ndarray or None
        Bessel angular order ``k`` per mode and ``'cos'``/``'sin'`` flag.
    """

    values: np.ndarray
    means: np.ndarray
    nonzero_mean: np.ndarray
    theta: float
    backend: str
    area_p: float
    vectors: np.ndarray = None
    orders: np.ndarray = None
    parity: np.ndarray = None
    zeros: np.ndarray = None
    radius: float = None
    center: tuple = None
    _field_cache: dict = field(default_factory=dict, repr=False)

    @property
    def n_modes(self):
        return len(self.values)

    @property
    def mu(self):
        """Nonzero-mean eigenvalues (dispersion poles)."""
        return self.values[self.nonzero_mean]

    @property
    def mu_means(self):
        return self.means[self.nonzero_mean]

    @property
    def mu_prime(self):
        """Zero-mean eigenvalues (resonances)."""
        return self.values[~self.nonzero_mean]

    @property
    def parseval_remainder(self):
        """``|P| - sum_j mean_j^2``: mass of the constant outside the computed modes."""
        return max(self.area_p - float(np.sum(self.means**2)), 0.0)

    def fields(self, geom):
        """Mode shapes as reduced-dof vectors on ``geom`` (one column per mode)."""
        if self.vectors is not None:
            return self.vectors
        key = id(geom)
        if key not in self._field_cache:
            self._field_cache.clear()
            self._field_cache[key] = _bessel_fields(self, geom)
        return self._field_cache[key]


def compute_spectrum(geom, n_modes=50, backend="fem", theta=None):
    """Compute and classify the lowest ``n_modes`` Dirichlet eigenpairs on P.

    Parameters
    ----------
    geom : CellGeometry
    n_modes : int
    backend : {'fem', 'bessel'}
        ``'bessel'`` needs a disk inclusion.
    theta : float, optional
        Mean threshold; backend default when omitted.

    Returns
    -------
    DirichletSpectrum
    """
    if n_modes < 1:
        raise ValueError("n_modes must be >= 1")
    if backend not in BACKENDS:
        raise BackendError(f"unknown backend {backend!r}; expected one of {BACKENDS}")
    theta = DEFAULT_THETA[backend] if theta is None else float(theta)
    if backend == "bessel":
        if not isinstance(geom.inclusion, Disk):
            raise BackendError("the Bessel backend needs a disk inclusion")
        raw = _bessel_spectrum(geom.inclusion, n_modes, theta)
    else:
        forms = FormSet(geom, (1.0, 0.0))
        vals, vecs = eigensolve(forms.K_p, forms.M_p, n_modes, shift=0.0, dofs=forms.pi)
        means = forms.ones @ (forms.M_p @ vecs)
        raw = DirichletSpectrum(
            values=vals, means=means, nonzero_mean=np.zeros(len(vals), dtype=bool),
            theta=theta, backend="fem", area_p=geom.area("P"), vectors=vecs,
        )
    return classify_means(raw, theta)


def classify_means(spec, theta):
    """Split modes into nonzero-mean and zero-mean families.

    Inside each cluster of numerically equal eigenvalues (relative gap below
    ``CLUSTER_GAP``) the basis is rotated so that a single vector carries the
    whole cluster mean. Nonzero-mean modes are then flipped to have positive
    mean.
    """
    vals = spec.values
    means = np.array(spec.means, dtype=float)
    vecs = None if spec.vectors is None else np.array(spec.vectors)
    start = 0
    while start < len(vals):
        stop = start + 1
        while stop < len(vals) and vals[stop] - vals[stop - 1] <= CLUSTER_GAP * abs(vals[stop]):
            stop += 1
        if stop - start > 1:
            m = means[start:stop]
            norm = np.linalg.norm(m)
            if norm > 0:
                # orthogonal rotation whose first row is m / |m|
                q, _ = np.linalg.qr(np.column_stack([m / norm, np.eye(len(m))[:, 1:]]))
                q = q * np.sign(q[:, 0] @ m)
                if vecs is not None:
                    vecs[:, start:stop] = vecs[:, start:stop] @ q
                means[start:stop] = q.T @ m
                means[start + 1:stop] = 0.0
        start = stop
    nonzero = np.abs(means) > theta * np.sqrt(spec.area_p)
    flip = np.where(nonzero & (means < 0), -1.0, 1.0)
    means = means * flip
    if vecs is not None:
        vecs = vecs * flip
    return replace(spec, means=means, nonzero_mean=nonzero, theta=float(theta), vectors=vecs,
                   _field_cache={})


def _bessel_spectrum(disk, n_modes, theta):
    r = disk.radius
    # enough zeros per order that the first n_modes are all present
    per_order = n_modes // 2 + 2
    entries = []
    k = 0
    while True:
        z = special.jn_zeros(k, per_order)
        if len(entries) >= n_modes and z[0] ** 2 > sorted(entries)[n_modes - 1][0]:
            break
        for zi in z:
            entries.append((zi**2, k, 0, zi))
            if k > 0:
                entries.append((zi**2, k, 1, zi))
        k += 1
    entries = [((zi / r) ** 2, k, p, zi) for _, k, p, zi in sorted(entries)]
    entries = entries[:n_modes]
    vals = np.array([e[0] for e in entries])
    orders = np.array([e[1] for e in entries])
    parity = np.array([e[2] for e in entries])
    zeros = np.array([e[3] for e in entries])
    means = np.where(orders == 0, 2.0 * np.sqrt(np.pi) * r / zeros, 0.0)
    return DirichletSpectrum(
        values=vals, means=means, nonzero_mean=np.zeros(len(vals), dtype=bool), theta=theta,
        backend="bessel", area_p=np.pi * r * r, orders=orders, parity=parity, zeros=zeros,
        radius=r, center=tuple(disk.center),
    )


def bessel_mode(spec, j, points):
    """Evaluate the ``j``-th analytic disk mode at ``points`` (zero outside)."""
    r, z, k = spec.radius, spec.zeros[j], spec.orders[j]
    d = np.asarray(points) - np.asarray(spec.center)
    rho = np.hypot(d[:, 0], d[:, 1])
    ang = np.arctan2(d[:, 1], d[:, 0])
    if k == 0:
        norm = np.sqrt(np.pi) * r * abs(special.j1(z))
        radial = special.jv(0, z * rho / r) / norm
    else:
        norm = r * abs(special.jv(k + 1, z)) * np.sqrt(np.pi / 2.0)
        radial = special.jv(k, z * rho / r) / norm
        radial = radial * (np.cos(k * ang) if spec.parity[j] == 0 else np.sin(k * ang))
    return np.where(rho < r, radial, 0.0)


def _bessel_fields(spec, geom):
    xy = geom.dof_coordinates()
    out = np.zeros((geom.n_dofs, spec.n_modes))
    inside = geom.interior_p_dofs
    for j in range(spec.n_modes):
        out[inside, j] = bessel_mode(spec, j, xy[inside])
    return out


def check_resonance(spec, zeta0, sign, epsilon):
    """Raise if ``zeta0`` is within ``epsilon`` of any eigenvalue (positive sign only)."""
    if sign < 0:
        return
    dist = np.abs(spec.values - zeta0)
    j = int(np.argmin(dist))
    if dist[j] < epsilon:
        raise ResonanceError(f"reduced frequency within {epsilon:.3g} of a Dirichlet eigenvalue",
                             eigenvalue=float(spec.values[j]), distance=float(dist[j]))


def _pole_guard(spec, zeta0, sign, rel=1e-9):
    if sign < 0:
        return
    mu = spec.mu
    if len(mu) == 0:
        return
    d = np.abs(mu - zeta0) / mu
    j = int(np.argmin(d))
    if d[j] < rel:
        raise PoleError("evaluation at a dispersion asymptote", eigenvalue=float(mu[j]),
                        distance=float(abs(mu[j] - zeta0)))


def spectral_sum(spec, zeta0, kind, sign=1, geom=None, epsilon=None):
    """Truncated eigenfunction sums used by the leading-order cell problems.

    Parameters
    ----------
    spec : DirichletSpectrum
    zeta0 : float
        Reduced frequency.
    kind : {'psi0', 'psi_star', 'solvability_const', 'dispersion'}
        ``psi0`` and ``psi_star`` return reduced-dof fields on ``geom``: the
        inclusion field with unit boundary data and the derivative field
        solving ``(sign Lap + zeta0) w = -psi0`` with zero boundary data.
        ``solvability_const`` is ``|Pc| + sum mu^2 m^2 / (mu - sign zeta0)^2``
        and ``dispersion`` is ``|Pc| + sum mu m^2 / (mu - sign zeta0)``, the
        cell integral of ``psi0``.
    sign : {1, -1}
        Sign of the inclusion coefficient.
    geom : CellGeometry, optional
        Needed for field kinds.
    epsilon : float, optional
        Resonance exclusion for field and constant kinds; defaults to
        ``1e-3 * nu_1``. The ``dispersion`` kind only guards the poles.

    Returns
    -------
    value : float or ndarray
    tail : float
        Bound on the contribution of modes beyond the truncation, from the
        Parseval remainder of the constant function.
    """
    if kind not in KINDS:
        raise ValueError(f"unknown kind {kind!r}; expected one of {KINDS}")
    if sign not in (1, -1):
        raise ValueError("sign must be +1 or -1")
    zeta0 = float(zeta0)
    if kind == "dispersion":
        _pole_guard(spec, zeta0, sign)
    else:
        eps = 1e-3 * spec.values[0] if epsilon is None else epsilon
        check_resonance(spec, zeta0, sign, eps)
    mu, m = spec.mu, spec.mu_means
    denom = mu - sign * zeta0
    remainder = spec.parseval_remainder
    nu_last = spec.values[-1]
    gap = nu_last - sign * zeta0
    area_pc = 1.0 - spec.area_p

    if kind == "dispersion":
        value = area_pc + float(np.sum(mu * m**2 / denom))
        tail = remainder * (nu_last / gap if gap > 0 else np.inf)
        return value, tail
    if kind == "solvability_const":
        value = area_pc + float(np.sum((mu * m / denom) ** 2))
        tail = remainder * ((nu_last / gap) ** 2 if gap > 0 else np.inf)
        return value, tail
    if geom is None:
        raise ValueError(f"kind {kind!r} needs a geometry")
    phi = spec.fields(geom)[:, spec.nonzero_mean]
    if kind == "psi0":
        coef = sign * zeta0 * m / denom
        value = 1.0 + phi @ coef
        tail = np.sqrt(remainder) * (abs(zeta0) / gap if gap > 0 else np.inf)
    else:
        coef = sign * mu * m / denom**2
        value = phi @ coef
        tail = np.sqrt(remainder) * (nu_last / gap**2 if gap > 0 else np.inf)
    return value, tail
