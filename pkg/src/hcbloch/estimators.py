"""scikit-learn style facades over the dispersion and series pipelines.

Both estimators take all physics settings as constructor parameters,
validate them in :meth:`fit` with the same rules as the JSON configuration,
and map a one-column input (``zeta0`` or ``eta``) to a one-dimensional output.
"""
import json

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from .config import parse_config
from .workflow import bounds_report, prepare, series_run


def _column(X, name):
    arr = np.asarray(X, dtype=float)
    if arr.ndim == 0:
        arr = arr.reshape(1)
    if arr.ndim == 1:
        arr = arr.reshape(-1, 1)
    arr = check_array(arr, ensure_2d=True, dtype=float)
    if arr.shape[1] != 1:
        raise ValueError(f"{name} must have a single column, got {arr.shape[1]}")
    return arr[:, 0]


class _CellEstimator(BaseEstimator):
    _config_keys = ()

    def _config(self):
        params = {k: v for k, v in self.get_params().items() if k in self._config_keys and v is not None}
        if "center" in params:
            params["center"] = list(params["center"])
        return parse_config(json.dumps(params))

    def _setup(self, cfg):
        return prepare(cfg.inclusion(), cfg.h, cfg.direction, cfg.sign_value, cfg.n_modes, cfg.backend,
                       cfg.theta)


class HomogenizedDispersion(_CellEstimator):
    """Leading-order dispersion relation ``zeta0 -> tau^2`` for one direction.

    Parameters
    ----------
    radius : float
        Disk radius.
    center : tuple of float
    h : float
        Mesh size.
    n_modes : int
        Dirichlet modes kept in the spectral sums.
    sign : {'positive', 'negative'}
        Sign of the inclusion coefficient.
    angle : float
        Propagation direction in degrees.
    backend : {'fem', 'bessel'}

    Attributes
    ----------
    effective_constant_ : float
    poles_ : ndarray
        Asymptotes of the relation.
    band_edges_ : ndarray
        Lower band edges (at most four).
    setup_ : CellSetup
    """

    _config_keys = ("radius", "center", "h", "n_modes", "sign", "angle", "backend")

    def __init__(self, radius=0.375, center=(0.5, 0.5), h=1 / 64, n_modes=50, sign="positive", angle=0.0,
                 backend="fem"):
        self.radius = radius
        self.center = center
        self.h = h
        self.n_modes = n_modes
        self.sign = sign
        self.angle = angle
        self.backend = backend

    def fit(self, X=None, y=None):
        """Build mesh, spectrum and relation; ``X`` and ``y`` are ignored."""
        cfg = self._config()
        self.setup_ = self._setup(cfg)
        rel = self.setup_.relation
        self.effective_constant_ = rel.E
        self.poles_ = rel.poles
        self.band_edges_ = rel.band_edges(min(4, max(len(rel.poles), 1)))
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """``tau^2`` at each reduced frequency in ``X``."""
        check_is_fitted(self, "setup_")
        zs = _column(X, "zeta0")
        return np.array([self.setup_.relation.tau_squared(z) for z in zs])

    def frequency(self, tau, branch=0):
        """Reduced frequency on ``branch`` at wavenumber ``tau`` (inverse of :meth:`predict`)."""
        check_is_fitted(self, "setup_")
        return self.setup_.relation.invert_branch(branch, float(tau))


class BlochSeries(_CellEstimator):
    """Power series of a Bloch branch in the quasi-staticity ``eta``.

    Parameters
    ----------
    radius, center, h, n_modes, sign, angle, backend
        As for :class:`HomogenizedDispersion`.
    branch : int
    tau : float
    order : int
        Truncation order of the hierarchy.
    epsilon : float, optional
        Resonance exclusion.

    Attributes
    ----------
    solution_ : SeriesSolution
    zeta_ : ndarray
        Coefficients ``zeta_m``.
    zeta0_ : float
    """

    _config_keys = ("radius", "center", "h", "n_modes", "sign", "angle", "backend", "branch", "tau", "order",
                    "epsilon")

    def __init__(self, radius=0.375, center=(0.5, 0.5), h=1 / 64, n_modes=50, sign="positive", angle=0.0,
                 backend="fem", branch=0, tau=1.0, order=10, epsilon=None):
        self.radius = radius
        self.center = center
        self.h = h
        self.n_modes = n_modes
        self.sign = sign
        self.angle = angle
        self.backend = backend
        self.branch = branch
        self.tau = tau
        self.order = order
        self.epsilon = epsilon

    def fit(self, X=None, y=None):
        """Run the hierarchy; ``X`` and ``y`` are ignored."""
        cfg = self._config()
        if cfg.tau_value <= 0:
            raise ValueError("tau: the series needs a positive wavenumber")
        self.setup_ = self._setup(cfg)
        self.solution_ = series_run(self.setup_, cfg.branch, cfg.tau_value, cfg.order, cfg.epsilon)
        self.zeta_ = self.solution_.zeta
        self.zeta0_ = self.solution_.zeta0
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        """Truncated series frequency ``sum_m eta^m zeta_m`` at each ``eta`` in ``X``."""
        check_is_fitted(self, "solution_")
        etas = _column(X, "eta")
        return np.array([self.solution_.zeta_at(e).real for e in etas])

    def bounds(self):
        """Majorant report (constants, domination, radius estimates)."""
        check_is_fitted(self, "solution_")
        return bounds_report(self.setup_, self.solution_, self.epsilon)
