import sys

import numpy as np
import pytest

from fluidpass import catalog


@pytest.fixture
def ex1():
    return catalog.example1()


@pytest.fixture
def ex2():
    return catalog.example2()


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_model(rng, S, bmax=None, allow_zero=False):
    """Random irreducible model with at least one draining state."""
    from fluidpass.model import validate
    Q = rng.uniform(0.1, 2.0, (S, S))
    np.fill_diagonal(Q, 0.0)
    np.fill_diagonal(Q, -Q.sum(axis=1))
    r = rng.normal(0.0, 2.0, S)
    r[rng.integers(S)] = -abs(r[0]) - 0.5
    if allow_zero and S > 1 and rng.random() < 0.3:
        r[(np.argmin(r) + 1) % S] = 0.0
    return validate(Q, r, bmax if bmax is not None else float(rng.uniform(1.0, 5.0)))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    lines = getattr(mod, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda s: int(s.split("criterion")[1].split(":")[0])):
            terminalreporter.write_line(line)
