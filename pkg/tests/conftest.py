import numpy as np
import pytest

from segdist.grid import GridMask
from segdist.harness.dataset import make_pair

# Spacings whose squares and products are exact in binary floating point, so
# distance values from different code paths agree bit-for-bit.
DYADIC = (0.5, 0.75, 1.0, 1.25, 2.0)


def random_pair(rng, ndim=None, max_2d=64, max_3d=32, spacing=None, kind=None):
    """Random mask pair on a shared grid: sparse noise or perturbed blobs."""
    ndim = ndim or int(rng.choice([2, 3]))
    hi = max_2d if ndim == 2 else max_3d
    dims = tuple(int(n) for n in rng.integers(4, hi + 1, size=ndim))
    if spacing is None:
        spacing = tuple(float(s) for s in rng.choice(DYADIC, size=ndim))
    kind = kind or rng.choice(["noise", "blob"])
    if kind == "noise":
        density = rng.uniform(0.05, 0.4)
        a = rng.random(dims) < density
        b = rng.random(dims) < density
        a.flat[rng.integers(a.size)] = True
        b.flat[rng.integers(b.size)] = True
    else:
        a, b = make_pair(rng, dims, level=rng.uniform(0.1, 0.6), fill=rng.uniform(0.3, 0.7))
        if not b.any():
            b = a.copy()
    return GridMask(a, spacing), GridMask(b, spacing)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


_VERDICTS: list[str] = []


@pytest.fixture
def verdict(request):
    """Record one PASS/FAIL line for an acceptance criterion, then assert on it."""

    def record(label, ok, detail=""):
        line = f"{'PASS' if ok else 'FAIL'}  {label}" + (f"  ({detail})" if detail else "")
        _VERDICTS.append(line)
        reporter = request.config.pluginmanager.get_plugin("terminalreporter")
        if reporter is not None:
            reporter.write_line("")
            reporter.write_line(line)
        else:
            print(line)
        assert ok, line

    return record


def pytest_terminal_summary(terminalreporter):
    if _VERDICTS:
        terminalreporter.section("acceptance criteria")
        for line in _VERDICTS:
            terminalreporter.write_line(line)
