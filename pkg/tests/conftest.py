import numpy as np
import pytest

from pbiharmonic.mesh import build_structured
from pbiharmonic.space import DgFunction, build_space


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_function(space, rng, scale=1.0):
    return DgFunction(space, scale * rng.standard_normal(space.total_dofs))


@pytest.fixture(scope="session")
def space_n2k2():
    return build_space(build_structured(2), 2)
