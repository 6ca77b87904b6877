"""JSON run configuration with defaults and strict validation."""
import json
import math
from dataclasses import asdict, dataclass, field

from .exceptions import ConfigError
from .geometry import Disk, Polygon

SIGNS = {"positive": 1, "negative": -1, 1: 1, -1: -1}
BACKENDS = ("fem", "bessel")


@dataclass(frozen=True)
class RunConfig:
    """Validated settings for every subcommand.

    ``tau`` may be a single value or a list; subcommands that need one
    value use the first entry.
    """

    kind: str = "disk"
    radius: float = 0.375
    center: tuple = (0.5, 0.5)
    vertices: tuple = ()
    h: float = 1.0 / 64
    n_modes: int = 50
    sign: str = "positive"
    branch: int = 0
    angle: float = 0.0
    tau: tuple = (1.0,)
    order: int = 10
    epsilon: float = None
    etas: tuple = (0.08, 0.04, 0.02)
    validate_order: int = 6
    backend: str = "fem"
    theta: float = None
    zeta_max: float = None
    n_samples: int = 400
    svg: bool = True
    output: str = None
    deterministic: bool = field(default=True)

    @property
    def sign_value(self):
        return SIGNS[self.sign]

    @property
    def direction(self):
        a = math.radians(self.angle)
        c, s = math.cos(a), math.sin(a)
        # exact axis directions for multiples of 90 degrees
        c = 0.0 if abs(c) < 1e-15 else c
        s = 0.0 if abs(s) < 1e-15 else s
        return (c, s)

    @property
    def tau_value(self):
        return self.tau[0]

    def inclusion(self):
        if self.kind == "disk":
            return Disk(self.radius, self.center)
        return Polygon(self.vertices)

    def to_json(self):
        """Effective configuration, stable key order, for reproducibility echoes."""
        d = asdict(self)
        d["center"] = list(self.center)
        d["vertices"] = [list(v) for v in self.vertices]
        d["tau"] = list(self.tau)
        d["etas"] = list(self.etas)
        return json.dumps(d, indent=2, sort_keys=True) + "\n"


FIELDS = tuple(RunConfig.__dataclass_fields__)


def _number(name, value, kind=float):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{name}: expected a number, got {value!r}")
    if kind is int:
        if float(value) != int(value):
            raise ConfigError(f"{name}: expected an integer, got {value!r}")
        return int(value)
    if not math.isfinite(value):
        raise ConfigError(f"{name}: must be finite")
    return float(value)


def _number_list(name, value):
    values = value if isinstance(value, (list, tuple)) else [value]
    if not values:
        raise ConfigError(f"{name}: must not be empty")
    return tuple(_number(name, v) for v in values)


def parse_config(text):
    """Parse and validate a JSON configuration.

    Parameters
    ----------
    text : str or bytes
        UTF-8 JSON object. Unknown keys are rejected.

    Returns
    -------
    RunConfig

    Raises
    ------
    ConfigError
        With a message naming the offending field and constraint.
    """
    if isinstance(text, bytes):
        text = text.decode("utf-8")
    try:
        raw = json.loads(text) if text.strip() else {}
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config: invalid JSON ({exc.msg} at line {exc.lineno})") from None
    if not isinstance(raw, dict):
        raise ConfigError("config: top level must be a JSON object")
    unknown = sorted(set(raw) - set(FIELDS))
    if unknown:
        raise ConfigError(f"config: unknown keys {unknown}")
    if "deterministic" in raw and raw["deterministic"] is not True:
        raise ConfigError("deterministic: runs are always deterministic and cannot be switched off")

    kw = {}
    kind = raw.get("kind", "disk")
    if kind not in ("disk", "polygon"):
        raise ConfigError("kind: must be 'disk' or 'polygon'")
    kw["kind"] = kind
    if "radius" in raw:
        kw["radius"] = _number("radius", raw["radius"])
    if "center" in raw:
        c = raw["center"]
        if not isinstance(c, (list, tuple)) or len(c) != 2:
            raise ConfigError("center: must be a pair [x, y]")
        kw["center"] = (_number("center", c[0]), _number("center", c[1]))
    if "vertices" in raw:
        v = raw["vertices"]
        if v == [] and kind == "disk":
            v = None
        elif not isinstance(v, list) or len(v) < 3 or any(not isinstance(p, list) or len(p) != 2 for p in v):
            raise ConfigError("vertices: must be a list of at least three [x, y] pairs")
        if v is not None:
            kw["vertices"] = tuple((_number("vertices", p[0]), _number("vertices", p[1])) for p in v)
    for name in ("h", "angle", "epsilon", "theta", "zeta_max"):
        if raw.get(name) is not None:
            kw[name] = _number(name, raw[name])
    for name in ("n_modes", "branch", "order", "n_samples", "validate_order"):
        if name in raw:
            kw[name] = _number(name, raw[name], int)
    if "sign" in raw:
        if raw["sign"] not in SIGNS or isinstance(raw["sign"], bool):
            raise ConfigError("sign: must be 'positive' or 'negative'")
        kw["sign"] = {1: "positive", -1: "negative"}.get(raw["sign"], raw["sign"])
    if "tau" in raw:
        kw["tau"] = _number_list("tau", raw["tau"])
    if "etas" in raw:
        kw["etas"] = _number_list("etas", raw["etas"])
    if "backend" in raw:
        kw["backend"] = raw["backend"]
    if "svg" in raw:
        if not isinstance(raw["svg"], bool):
            raise ConfigError("svg: must be true or false")
        kw["svg"] = raw["svg"]
    if raw.get("output") is not None:
        if not isinstance(raw["output"], str):
            raise ConfigError("output: must be a directory path")
        kw["output"] = raw["output"]

    cfg = RunConfig(**kw)
    _validate(cfg)
    return cfg


def _validate(cfg):
    if cfg.kind == "disk":
        if not cfg.radius > 0:
            raise ConfigError("radius: must be positive")
        cx, cy = cfg.center
        if not (cfg.radius < 0.5 and 0 < cx - cfg.radius and cx + cfg.radius < 1
                and 0 < cy - cfg.radius and cy + cfg.radius < 1):
            raise ConfigError("radius: inclusion not strictly interior to the unit cell")
        size = cfg.radius
    else:
        if not cfg.vertices:
            raise ConfigError("vertices: required for a polygonal inclusion")
        try:
            poly = Polygon(cfg.vertices)
        except Exception as exc:
            raise ConfigError(f"vertices: {exc}") from None
        if not poly.margin() > 0:
            raise ConfigError("vertices: inclusion not strictly interior to the unit cell")
        xs = [v[0] for v in cfg.vertices]
        ys = [v[1] for v in cfg.vertices]
        size = 0.5 * min(max(xs) - min(xs), max(ys) - min(ys))
    if not 0 < cfg.h <= size / 4:
        raise ConfigError(f"h: must satisfy 0 < h <= {size / 4:.6g} (a quarter of the inclusion size)")
    if cfg.n_modes < 1:
        raise ConfigError("n_modes: must be at least 1")
    if cfg.branch < 0:
        raise ConfigError("branch: must be non-negative")
    if cfg.sign == "negative" and cfg.branch != 0:
        raise ConfigError("branch: a negative inclusion coefficient has the single branch 0")
    if any(t < 0 for t in cfg.tau):
        raise ConfigError("tau: must be non-negative")
    if cfg.order < 2:
        raise ConfigError("order: must be at least 2")
    if not 0 <= cfg.validate_order <= cfg.order:
        raise ConfigError("validate_order: must lie between 0 and order")
    if any(not 0 < e <= 0.5 for e in cfg.etas):
        raise ConfigError("etas: each value must lie in (0, 0.5]")
    if cfg.epsilon is not None and not cfg.epsilon > 0:
        raise ConfigError("epsilon: must be positive")
    if cfg.theta is not None and not cfg.theta > 0:
        raise ConfigError("theta: must be positive")
    if cfg.zeta_max is not None and not cfg.zeta_max > 0:
        raise ConfigError("zeta_max: must be positive")
    if cfg.n_samples < 2:
        raise ConfigError("n_samples: must be at least 2")
    if cfg.backend not in BACKENDS:
        raise ConfigError(f"backend: must be one of {list(BACKENDS)}")
    if cfg.backend == "bessel" and cfg.kind != "disk":
        raise ConfigError("backend: the Bessel backend needs a disk inclusion")
