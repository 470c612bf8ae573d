import functools

import numpy as np
import pytest

from ordinal_thresholds.distributions import DistributionFamily, build_distribution
from ordinal_thresholds.losses import SurrogateSpec
from ordinal_thresholds.risk import FitConfig, fit


@functools.lru_cache(maxsize=None)
def dist_for(label: str):
    return build_distribution(DistributionFamily.parse(label))


@functools.lru_cache(maxsize=None)
def cached_fit(label: str, method: str, epochs: int = 100_000):
    """Population fits are deterministic, so one fit per (dist, method, T) is shared across tests."""
    return fit(dist_for(label), SurrogateSpec.parse(method), FitConfig(epochs=epochs), trace_every=epochs)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


# one summary line per acceptance criterion, filled by test_acceptance.py
ACCEPTANCE_LINES: dict = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_LINES:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(ACCEPTANCE_LINES):
        terminalreporter.write_line(ACCEPTANCE_LINES[n])
