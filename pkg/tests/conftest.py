"""Shared fixtures and instance builders for the ofusion test suite."""

import numpy as np
import pytest

from ofusion.generate import KINDS, random_instance
from ofusion.linalg import Field, Subspace


def pytest_configure(config: pytest.Config) -> None:
    config.addinivalue_line("markers", "slow: longer randomized sweeps")


@pytest.fixture
def rng(request: pytest.FixtureRequest) -> np.random.Generator:
    """A PCG64 generator; the seed comes from indirect parametrization or defaults to 2024."""
    return np.random.default_rng(getattr(request, "param", 2024))


def e(n: int, *idx: int) -> np.ndarray:
    """Columns of the n x n identity (0-based)."""
    return np.eye(n)[:, list(idx)]


def coord(n: int, *idx: int) -> Subspace:
    return Subspace(e(n, *idx))


def instances(seed: int, count: int, kinds=KINDS, n_range=(2, 12), m_range=(1, 5), fields=(Field.REAL, Field.COMPLEX)):
    """Yield ``count`` random instances cycling through kinds and fields, skipping infeasible sizes."""
    rng = np.random.default_rng(seed)
    made = 0
    attempt = 0
    while made < count:
        kind = kinds[attempt % len(kinds)]
        field = fields[attempt % len(fields)]
        attempt += 1
        n = int(rng.integers(n_range[0], n_range[1] + 1))
        m = int(rng.integers(m_range[0], m_range[1] + 1))
        if kind == "riesz":
            m = min(m, n)
        if kind == "overcomplete":
            m = max(2, min(m, n))
            if n < 2:
                continue
        yield rng, random_instance(rng, n, m, kind, field)
        made += 1


ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":").rstrip("ab"))):
            terminalreporter.write_line(line)
