import os
import sys
from fractions import Fraction

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from shrinking_targets.phi_funcs import LogStack, Shifted  # noqa: E402
from shrinking_targets.simulate import theta_builder_remark_i  # noqa: E402

ACCEPTANCE_LINES = []


def record(criterion, ok, detail):
    """Remember one acceptance verdict; printed in the terminal summary."""
    ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] criterion {criterion}: {detail}")
    print(ACCEPTANCE_LINES[-1])


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def greedy_theta_shifted():
    """Greedy theta with phi(q_k) > k^2 for phi = max(log n, 4), k <= 201."""
    return theta_builder_remark_i(Shifted(LogStack(1), Fraction(4)), 201)


@pytest.fixture(scope="session")
def greedy_theta_log():
    """Greedy theta with log q_k > k^2, k <= 12 (q_12 is far beyond 2**66)."""
    return theta_builder_remark_i(LogStack(1), 12)
