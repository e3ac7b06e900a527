import sys
from pathlib import Path

import numpy as np
import pytest

sys.path.insert(0, str(Path(__file__).parent))

from cavity_stability.elasticity import BoundaryData, LameParams, solve_equilibrium  # noqa: E402
from cavity_stability.geometry import RadialProfile  # noqa: E402

P = LameParams(1.0, 0.0)


def solved(h, alpha, p=P, n_rho=48):
    return solve_equilibrium(h, BoundaryData(alpha, h.R0), p, n_rho)


@pytest.fixture(scope="session")
def disk_half():
    """r = 0.5, R0 = 1, alpha = 1."""
    h = RadialProfile.circle(0.5, 64, 1.0)
    return h, solved(h, 1.0)


@pytest.fixture(scope="session")
def disk_window():
    """r = 0.995 inside the certified window."""
    h = RadialProfile.circle(0.995, 64, 1.0)
    return h, solved(h, 1.0)


@pytest.fixture(scope="session")
def unit_circle_free():
    """h = 1 in R0 = 2 with zero outer data: perimeter only."""
    h = RadialProfile.circle(1.0, 64, 2.0)
    return h, solved(h, 0.0)


@pytest.fixture(scope="session")
def trefoil():
    """Non-critical shape h = 1 + 0.1 cos 3 theta in R0 = 2."""
    h = RadialProfile.from_function(lambda t: 1 + 0.1 * np.cos(3 * t), 64, 2.0)
    return h, solved(h, 1.0)


# criterion number -> (passed, detail); filled by tests/test_acceptance.py
ACCEPTANCE = {}
N_CRITERIA = 10


def pytest_terminal_summary(terminalreporter):
    ran = any("test_acceptance" in r.nodeid for k in ("passed", "failed", "error")
              for r in terminalreporter.stats.get(k, []))
    if not ran:
        return
    terminalreporter.section("acceptance criteria")
    for n in range(1, N_CRITERIA + 1):
        ok, detail = ACCEPTANCE.get(n, (False, "did not complete"))
        terminalreporter.write_line(f"criterion {n}: {'PASS' if ok else 'FAIL'}  {detail}")
