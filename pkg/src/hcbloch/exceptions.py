"""Exception hierarchy.

Everything raised on purpose by the package derives from :class:`BlochError`
so the CLI can map failures to exit codes. :class:`ConfigError` (and the
geometry errors it wraps) mean bad input; the rest are numerical failures.
"""


class BlochError(Exception):
    """Base class for all package errors."""


class ConfigError(BlochError, ValueError):
    """A configuration value violates its schema or range."""


class GeometryError(ConfigError):
    """The inclusion is not strictly inside the unit cell."""


class ResolutionError(ConfigError):
    """The mesh is too coarse to resolve the inclusion."""


class SolverError(BlochError):
    """A linear or eigen solve failed to reach its tolerance."""

    def __init__(self, message, residuals=None):
        super().__init__(message)
        self.residuals = list(residuals) if residuals is not None else []


class SolvabilityError(BlochError):
    """A singular system was handed an incompatible right-hand side."""

    def __init__(self, message, defect):
        super().__init__(f"{message} (defect={defect:.3e})")
        self.defect = defect


class HierarchyError(SolvabilityError):
    """A cell problem of the hierarchy failed its consistency check."""

    def __init__(self, equation, order, defect):
        super().__init__(f"{equation} failed at order {order}", defect)
        self.equation = equation
        self.order = order


class ResonanceError(BlochError):
    """The frequency sits too close to a Dirichlet eigenvalue of the inclusion."""

    def __init__(self, message, eigenvalue, distance):
        super().__init__(message)
        self.eigenvalue = eigenvalue
        self.distance = distance


class PoleError(ResonanceError):
    """A dispersion sum was evaluated on top of one of its poles."""


class BackendError(BlochError, ValueError):
    """The requested spectrum backend cannot handle this geometry."""


class InversionError(BlochError):
    """A dispersion branch cannot reach the requested wavenumber."""


class TrackingError(BlochError):
    """No direct eigenvalue was found near the requested target."""
