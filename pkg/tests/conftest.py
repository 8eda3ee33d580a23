import numpy as np
import pytest

from pcvt.geometry import TorusDomain


@pytest.fixture
def square():
    return TorusDomain.square(1.0)


@pytest.fixture
def hexa():
    return TorusDomain.hexagonal(1.0)


@pytest.fixture(params=["square", "hexagonal"])
def torus(request):
    return TorusDomain.from_kind(request.param, 1.0)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def random_gens(domain, n, seed):
    return domain.random_points(n, np.random.default_rng(seed))


def image_shifts(domain, reach=1):
    b = domain.basis
    return np.array([i * b[0] + j * b[1] for i in range(-reach, reach + 1) for j in range(-reach, reach + 1)])
