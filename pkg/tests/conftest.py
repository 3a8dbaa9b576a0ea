import numpy as np
import pytest

from hadamard import Euclidean, Hyperboloid, MetricTree, ProductSpace

TRIPOD_EDGES = [("o", "a", 1.0), ("o", "b", 1.0), ("o", "c", 1.0)]
CATERPILLAR_EDGES = [
    ("v0", "v1", 1.0),
    ("v1", "v2", 1.5),
    ("v2", "v3", 0.5),
    ("v2", "v4", 2.0),
    ("v1", "v5", 1.0),
]


@pytest.fixture(scope="session")
def e2():
    return Euclidean(2)


@pytest.fixture(scope="session")
def e3():
    return Euclidean(3)


@pytest.fixture(scope="session")
def h2():
    return Hyperboloid(2)


@pytest.fixture(scope="session")
def tripod():
    return MetricTree(TRIPOD_EDGES)


@pytest.fixture(scope="session")
def caterpillar():
    return MetricTree(CATERPILLAR_EDGES)


@pytest.fixture(scope="session")
def product(e2, tripod):
    return ProductSpace(e2, tripod)


@pytest.fixture(scope="session")
def all_models(e3, h2, tripod, caterpillar, product):
    return {
        "euclidean3": e3,
        "hyperbolic2": h2,
        "tripod": tripod,
        "caterpillar": caterpillar,
        "euclidean-x-tripod": product,
    }


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
