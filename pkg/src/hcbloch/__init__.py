"""Power-series Bloch waves in high-contrast periodic media."""
from .config import RunConfig, parse_config
from .direct import convergence_study, direct_bloch_solve, evaluate_series, weakform_residual
from .dispersion import DispersionRelation, effective_constant
from .estimators import BlochSeries, HomogenizedDispersion
from .exceptions import BlochError, ConfigError
from .fem import FormSet, assemble
from .geometry import Disk, Polygon, build_mesh
from .hierarchy import run_hierarchy
from .spectrum import compute_spectrum
from .workflow import bounds_report, prepare, series_run

__all__ = [
    "BlochError", "BlochSeries", "ConfigError", "Disk", "DispersionRelation", "FormSet",
    "HomogenizedDispersion", "Polygon", "RunConfig", "assemble", "bounds_report", "build_mesh",
    "compute_spectrum", "convergence_study", "direct_bloch_solve", "effective_constant",
    "evaluate_series", "parse_config", "prepare", "run_hierarchy", "series_run", "weakform_residual",
]
