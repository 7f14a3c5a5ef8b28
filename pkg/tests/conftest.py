import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from mcaret.corpus import empty_system, sys1, sys2  # noqa: E402
from mcaret.mpds import LassoRun, initial_config, replay  # noqa: E402


@pytest.fixture
def m1():
    return sys1()


@pytest.fixture
def m2():
    return sys2()


@pytest.fixture
def m0():
    return empty_system()


@pytest.fixture
def sys1_lasso(m1):
    """(g0,[bot]) -call-> (g0,[bot a]) -ret-> (g1,[bot]) -int-> (g0,[bot]), cycling."""
    run = replay(m1, initial_config(("g0", 1), 1), [0, 1, 2])
    return LassoRun(run, 0)


SAMPLES = os.path.join(os.path.dirname(os.path.dirname(os.path.abspath(__file__))), "samples")
