import sys

import numpy as np
import pytest


def random_joint(rng, n, m):
    p = rng.uniform(size=(n, m))
    return p / p.sum()


def random_simplex(rng, k):
    w = rng.uniform(size=k)
    return w / w.sum()


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "LINES", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
