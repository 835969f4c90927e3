import numpy as np
import pytest

from depthsal.segmentation import RegionStats

# acceptance criteria report here; printed once at the end of the session
ACCEPTANCE_LINES = []


def make_stats(n, centroid, mean_lab=None, mean_depth=None):
    """RegionStats from explicit per-region values."""
    n = np.asarray(n, dtype=np.float64)
    k = len(n)
    return RegionStats(
        n=n,
        p=n / n.sum(),
        centroid=np.asarray(centroid, dtype=np.float64).reshape(k, 2),
        mean_lab=np.zeros((k, 3)) if mean_lab is None else np.asarray(mean_lab, dtype=np.float64),
        mean_depth=np.zeros(k) if mean_depth is None else np.asarray(mean_depth, dtype=np.float64),
    )


def random_stats(rng, k):
    n = rng.integers(1, 500, size=k)
    return make_stats(
        n,
        rng.random((k, 2)),
        mean_lab=np.column_stack([rng.uniform(0, 100, k), rng.uniform(-80, 80, k),
                                  rng.uniform(-80, 80, k)]),
        mean_depth=rng.random(k),
    )


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
