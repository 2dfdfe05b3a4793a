import pytest

from chase_escape.stats import kolmogorov_c, ks_critical_value

# Unit tests run many KS tests; each uses a 0.1% false-alarm rate.
# The acceptance tests keep the fixed 1% constants.
UNIT_C = kolmogorov_c(0.001)


@pytest.fixture
def ks_crit():
    def crit(m, n=None):
        return ks_critical_value(m, n, UNIT_C)

    return crit


_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def acceptance_lines():
    return _ACCEPTANCE_LINES


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda x: int(x[1:3])):
            terminalreporter.write_line(line)
