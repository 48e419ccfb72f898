import numpy as np
import pytest

from cubedim import GeneratorSpec, MetricDescriptor, MetricSpace, generate
from cubedim.cubes import build_adjacent_family, build_system
from cubedim.nets import NetParams


@pytest.fixture(scope="session")
def params():
    return NetParams()


@pytest.fixture(scope="session")
def grid257():
    return MetricSpace(MetricDescriptor("euclidean"), coords=np.arange(257) / 256.0)


@pytest.fixture(scope="session")
def ultra4():
    return generate(GeneratorSpec(kind="ultrametric_cantor", arity=2, base=1 / 16, depth=4))


@pytest.fixture(scope="session")
def ultra6():
    return generate(GeneratorSpec(kind="ultrametric_cantor", arity=2, base=1 / 16, depth=6))


@pytest.fixture(scope="session")
def cantor10():
    return generate(GeneratorSpec(kind="cantor", ratio=1 / 3, depth=10))


@pytest.fixture(scope="session")
def ultra6_system(ultra6, params):
    return build_system(ultra6, params, seed=0)


@pytest.fixture(scope="session")
def ultra6_family(ultra6, params):
    return build_adjacent_family(ultra6, params, K_max=4, query_budget=200,
                                 target_ratio=64.0, seed=5)


@pytest.fixture(scope="session")
def cantor10_family(cantor10, params):
    return build_adjacent_family(cantor10, params, K_max=4, query_budget=200,
                                 target_ratio=64.0, seed=5)
