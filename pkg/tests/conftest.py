import numpy as np
import pytest

from rsvrc.harness.data import simulate_classifier, simulate_student_t


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def small_student():
    return simulate_student_t(4, 200, 3.0, 0.1, seed=7).objective()


@pytest.fixture(scope="session")
def small_sphere():
    return simulate_classifier(5, 300, 0.02, seed=7).objective()


def e(i, n):
    v = np.zeros(n)
    v[i] = 1.0
    return v


# one PASS/FAIL line per acceptance criterion, echoed in the terminal summary
CRITERIA: dict[int, str] = {}


@pytest.fixture(scope="session")
def criterion_report():
    def report(n: int, passed: bool, detail: str):
        line = f"criterion {n}: {'PASS' if passed else 'FAIL'}  {detail}"
        CRITERIA[n] = line
        print(line)
        return passed

    return report


def pytest_terminal_summary(terminalreporter):
    if CRITERIA:
        terminalreporter.section("acceptance criteria")
        for n in sorted(CRITERIA):
            terminalreporter.write_line(CRITERIA[n])
