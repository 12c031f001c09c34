import numpy as np
import pytest

from ubound.scalar import ScalarParams


@pytest.fixture
def log_grid():
    """The 20 x 20 (b, c) grid used throughout: b in [2^-6, 2^20], c in [2^-6, 2^12]."""
    bs = 2.0 ** np.linspace(-6, 20, 20)
    cs = 2.0 ** np.linspace(-6, 12, 20)
    return bs, cs


@pytest.fixture
def regimes():
    # one representative per regime plus a stiff and a heavily damped case
    return [ScalarParams(2.0, 3.0), ScalarParams(1.0, 2.0), ScalarParams(1.0, 1.0),
            ScalarParams(1e6, 1.0), ScalarParams(1.0, 1e3)]


def pytest_terminal_summary(terminalreporter):
    import sys
    lines = []
    for mod in list(sys.modules.values()):
        lines = getattr(mod, "ACCEPTANCE_LINES", None) or lines
        if lines:
            break
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines):
            terminalreporter.write_line(line)
