import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from randsimplex import make_polygon, random_polygon, regular_polygon

settings.register_profile(
    "default", max_examples=40, deadline=None, derandomize=True, suppress_health_check=[HealthCheck.too_slow]
)
settings.load_profile("default")


@pytest.fixture
def triangle():
    return make_polygon([[0, 0], [1, 0], [0, 1]])


@pytest.fixture
def square():
    return make_polygon([[-1, -1], [1, -1], [1, 1], [-1, 1]])


@pytest.fixture
def unit_square():
    return make_polygon([[0, 0], [1, 0], [1, 1], [0, 1]])


@pytest.fixture
def hexagon():
    return regular_polygon(6, phase=0.0)


def random_affine(rng, d=2):
    while True:
        A = rng.normal(size=(d, d))
        if abs(np.linalg.det(A)) > 0.2:
            return A, rng.normal(size=d)


def polygons(seed, count, n_range=(4, 12), affine=True):
    rng = np.random.default_rng(seed)
    return [random_polygon(int(rng.integers(*n_range, endpoint=True)), seed=int(rng.integers(2**31)),
                           affine=affine) for _ in range(count)]
