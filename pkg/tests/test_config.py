import json

import pytest

from hcbloch.config import RunConfig, parse_config
from hcbloch.exceptions import ConfigError


def test_minimal_config_gets_defaults():
    cfg = parse_config('{"radius": 0.375, "sign": "positive"}')
    assert cfg.h == 1 / 64 and cfg.n_modes == 50 and cfg.order == 10
    assert cfg.branch == 0 and cfg.angle == 0.0
    assert cfg.sign_value == 1


def test_empty_text_is_all_defaults():
    assert parse_config("") == RunConfig()


def test_radius_outside_cell():
    with pytest.raises(ConfigError, match="inclusion not strictly interior"):
        parse_config('{"radius": 0.6}')


def test_off_centre_disk_must_stay_inside():
    with pytest.raises(ConfigError, match="radius"):
        parse_config('{"radius": 0.3, "center": [0.25, 0.5]}')


def test_angle_ninety_degrees():
    d = parse_config('{"angle": 90}').direction
    assert abs(d[0]) <= 1e-15 and abs(d[1] - 1) <= 1e-15


def test_direction_is_unit():
    d = parse_config('{"angle": 33.3}').direction
    assert d[0] ** 2 + d[1] ** 2 == pytest.approx(1.0, abs=1e-15)


@pytest.mark.parametrize("text, field", [
    ('{"foo": 1}', "unknown keys"),
    ('{"h": 0.2}', "h:"),
    ('{"order": 1}', "order:"),
    ('{"sign": "zero"}', "sign:"),
    ('{"n_modes": 2.5}', "n_modes:"),
    ('{"etas": [0.1, 0.7]}', "etas:"),
    ('{"sign": "negative", "branch": 1}', "branch:"),
    ('{"backend": "spline"}', "backend:"),
    ('{"radius": "big"}', "radius:"),
    ('{"deterministic": false}', "deterministic:"),
    ('[1, 2]', "config:"),
    ('{"radius": ', "config:"),
])
def test_schema_violations_name_the_field(text, field):
    with pytest.raises(ConfigError, match=field):
        parse_config(text)


def test_tau_scalar_or_list():
    assert parse_config('{"tau": 2}').tau == (2.0,)
    assert parse_config('{"tau": [0.5, 1, 2]}').tau_value == 0.5


def test_numeric_sign_accepted():
    assert parse_config('{"sign": -1}').sign == "negative"


def test_polygon_config():
    cfg = parse_config(json.dumps({"kind": "polygon", "vertices": [[0.3, 0.3], [0.7, 0.3], [0.5, 0.7]],
                                   "h": 0.025}))
    assert cfg.inclusion().area == pytest.approx(0.08)


def test_echo_round_trips():
    cfg = parse_config('{"radius": 0.3, "tau": [1, 2], "etas": [0.1]}')
    echo = json.loads(cfg.to_json())
    echo.pop("deterministic")
    assert parse_config(json.dumps(echo)) == cfg


def test_bytes_input():
    assert parse_config(b'{"radius": 0.3}').radius == 0.3
