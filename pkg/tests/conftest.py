import pytest

from iet import fixtures
from iet.cocycle import lyapunov_and_stable_space
from iet.induction import iterate_rv


@pytest.fixture(scope="session")
def g2():
    """Genus-2 periodic fixture with a 36-period trace and its splitting."""
    fx = fixtures.periodic_g2()
    trace = iterate_rv(fx.iem, 36 * 8, fast_cycles=False)
    split = lyapunov_and_stable_space(fx.path(60), genus=2)
    return fx, trace, split


@pytest.fixture(scope="session")
def d5s2():
    """d=5, s=2 periodic fixture with trace and splitting."""
    fx = fixtures.periodic_d5s2()
    trace = iterate_rv(fx.iem, 30 * 12, fast_cycles=False)
    split = lyapunov_and_stable_space(fx.path(50), genus=2)
    return fx, trace, split
