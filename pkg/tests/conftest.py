import warnings

import pytest

from thomson.dynamics import Scenario, init_electron
from thomson.pulse import PulseParams

# numba probes TBB at import; irrelevant on the workqueue layer
warnings.filterwarnings("ignore", message=".*TBB.*")

ACCEPTANCE = []


def record(criterion: str, passed: bool, detail: str) -> None:
    line = f"[{'PASS' if passed else 'FAIL'}] {criterion}: {detail}"
    ACCEPTANCE.append(line)
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def headon10():
    return Scenario(PulseParams(tau=1.0, n_c=0.0), init_electron(10.0, "headon"))


@pytest.fixture(scope="session")
def headon10_flat():
    return Scenario(PulseParams(tau=1.0, n_c=10.0), init_electron(10.0, "headon"))


@pytest.fixture(scope="session")
def deg90_25():
    return Scenario(PulseParams(tau=2.0, n_c=10.0), init_electron(25.0, "deg90"))


@pytest.fixture(scope="session")
def headon45():
    return Scenario(PulseParams(tau=2.0, n_c=0.0), init_electron(45.0, "headon"))
