import numpy as np
import pytest

from hcbloch.dispersion import DispersionRelation
from hcbloch.fem import FormSet
from hcbloch.geometry import Disk, build_mesh
from hcbloch.spectrum import compute_spectrum
from hcbloch.workflow import CellSetup, series_run

RADIUS = 0.375


@pytest.fixture(scope="session")
def disk():
    return Disk(RADIUS)


@pytest.fixture(scope="session")
def geom(disk):
    return build_mesh(disk, 1 / 64)


@pytest.fixture(scope="session")
def coarse_geom(disk):
    return build_mesh(disk, 1 / 32)


@pytest.fixture(scope="session")
def forms(geom):
    return FormSet(geom, (1.0, 0.0))


@pytest.fixture(scope="session")
def spectrum(geom):
    return compute_spectrum(geom, 50, "fem")


@pytest.fixture(scope="session")
def bessel(geom):
    return compute_spectrum(geom, 50, "bessel")


def _setup(geom, forms, spectrum, sign):
    return CellSetup(geom, forms, spectrum, sign, DispersionRelation(spectrum, forms, sign))


@pytest.fixture(scope="session")
def setup_pos(geom, forms, spectrum):
    return _setup(geom, forms, spectrum, 1)


@pytest.fixture(scope="session")
def setup_neg(geom, forms, spectrum):
    return _setup(geom, forms, spectrum, -1)


@pytest.fixture(scope="session")
def series_pos(setup_pos):
    return series_run(setup_pos, branch=0, tau=1.0, order=10)


@pytest.fixture(scope="session")
def series_neg(setup_neg):
    return series_run(setup_neg, branch=0, tau=1.0, order=10)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
