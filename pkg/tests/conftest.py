from functools import lru_cache

import pytest

from workers.network.generators import generate
from workers.potential.harmonic import solve_escape
from workers.tiling.square_tiling import build_tiling


@lru_cache(maxsize=None)
def network(family: str):
    return generate(family)


@lru_cache(maxsize=None)
def tiled(family: str):
    net = network(family)
    return net, build_tiling(net, solve_escape(net))


@pytest.fixture(scope="session")
def series2():
    return network("series(2)")


@pytest.fixture(scope="session")
def parallel22():
    return network("parallel(2,2)")


@pytest.fixture(scope="session")
def k4net():
    return network("k4")


@pytest.fixture()
def out_dir(tmp_path):
    return tmp_path / "out"
