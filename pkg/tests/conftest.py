import numpy as np
import pytest
from hypothesis import settings

from torusnodal.ballstats import ScaleFunction
from torusnodal.eigenbasis import random_eigenfunction, sample_grid
from torusnodal.nodal import extract_nodal

settings.register_profile("suite", deadline=None, max_examples=25)
settings.load_profile("suite")


@pytest.fixture(scope="session")
def e65_field():
    """Shared random eigenfunction fixture at E=65, seed 7, grid 256."""
    return sample_grid(random_eigenfunction(65, 7), 256)


@pytest.fixture(scope="session")
def e65_nodal(e65_field):
    return extract_nodal(e65_field)


@pytest.fixture(scope="session")
def half_scale():
    return ScaleFunction(0.5)
