import functools

import numpy as np
import pytest

from ulampoly.homotopy import solve_system
from ulampoly.ulam_map import ResidualSystem


@functools.lru_cache(maxsize=None)
def solved(n, system="full", seed=0):
    return solve_system(n, ResidualSystem(system), seed)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def match_sets(a, b):
    """Max distance after greedily pairing each entry of ``a`` with one of ``b``."""
    b = list(b)
    worst = 0.0
    for z in a:
        k = int(np.argmin([abs(z - w) for w in b]))
        worst = max(worst, abs(z - b.pop(k)))
    return worst


ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for line in ACCEPTANCE:
        terminalreporter.write_line(line)
