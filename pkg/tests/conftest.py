import math

import pytest

from tmsv_bell import fock_oracle as fo

LAM1 = math.tanh(1.0)


@pytest.fixture(scope="session")
def spins40():
    return fo.pseudo_spin_ops(40)


@pytest.fixture(scope="session")
def lam1():
    return LAM1


ACCEPTANCE_LINES = []


@pytest.fixture
def criterion(request):
    """Record one pass/fail line for the acceptance summary."""

    def record(ok, detail):
        ACCEPTANCE_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {request.node.name}: {detail}")
        print(ACCEPTANCE_LINES[-1])
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
