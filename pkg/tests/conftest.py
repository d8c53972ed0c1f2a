import numpy as np
import pytest

from rqmc.core import RngStream


@pytest.fixture
def stream():
    return RngStream(7, (("test", 0),))


def elementary_interval_counts(points, b, k):
    """Occupancy of every elementary interval of volume b**-k, keyed by shape."""
    import itertools

    n, d = points.shape
    out = {}
    for shape in itertools.product(range(k + 1), repeat=d):
        if sum(shape) != k:
            continue
        cells = np.zeros(n, dtype=np.int64)
        for j, kj in enumerate(shape):
            cells = cells * b**kj + np.floor(points[:, j] * b**kj).astype(np.int64)
        out[shape] = np.bincount(cells, minlength=b**k)
    return out


def is_net(points, b, k):
    return all(np.all(c == 1) for c in elementary_interval_counts(points, b, k).values())


VERDICT_LINES = []


def pytest_terminal_summary(terminalreporter):
    if VERDICT_LINES:
        terminalreporter.section("acceptance criteria")
        for line in VERDICT_LINES:
            terminalreporter.write_line(line)
