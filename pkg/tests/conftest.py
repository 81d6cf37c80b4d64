import math
import warnings

import pytest

from strongdamp import FrequencyVector, ProblemSpec, trig_forcing

GOLDEN = (math.sqrt(5) - 1) / 2


@pytest.fixture
def periodic():
    """f = 1 + 0.5 sin t, omega = 1, eps = 0.05."""
    return ProblemSpec(trig_forcing(1.0, [(1, 0.5)]), FrequencyVector(1.0), epsilon=0.05)


@pytest.fixture
def golden():
    """f = 1 + 0.25 sin psi1 + 0.25 sin psi2, omega = (1, golden mean), eps = 0.02."""
    f = trig_forcing(1.0, [((1, 0), 0.25), ((0, 1), 0.25)], d=2)
    return ProblemSpec(f, FrequencyVector((1.0, GOLDEN), tau=1.0), epsilon=0.02)


@pytest.fixture(autouse=True)
def _quiet_domain_warnings():
    with warnings.catch_warnings():
        warnings.filterwarnings("ignore", message=".*certified radius.*")
        yield


# one line per acceptance criterion, repeated in the terminal summary
ACCEPTANCE_LINES = []


@pytest.fixture
def report_criterion():
    def record(number, passed, detail, seconds):
        line = f"criterion {number:>2}: {'PASS' if passed else 'FAIL'}  {detail}  [{seconds:.2f} s]"
        ACCEPTANCE_LINES.append(line)
        print(line)
    return record


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
