import random

import pytest

from catalog.presets import catalog
from config.production import ReductionSettings, TestingConfig
from models.ring import RingContext, parse_poly


@pytest.fixture
def ctx1():
    """k[x][y, z]"""
    return RingContext(m=1, n=1)


@pytest.fixture
def ctx2():
    """k[x][y, z, w]"""
    return RingContext(m=1, n=2, z_names=('z', 'w'))


@pytest.fixture
def ctx3():
    return RingContext(m=1, n=3, z_names=('z1', 'z2', 'z3'))


@pytest.fixture
def poly(ctx1):
    def build(text, ctx=None):
        return parse_poly(text, ctx or ctx1)
    return build


@pytest.fixture
def settings():
    return ReductionSettings.from_config(TestingConfig)


@pytest.fixture
def rng():
    return random.Random(20240611)


@pytest.fixture
def presets():
    return catalog
