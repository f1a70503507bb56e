"""Shared fixtures.

The radial profile pairs are expensive (a few seconds each), so one
representative per decay regime plus the equal-exponent pair in two
dimensions are solved once per session and shared.  The acceptance tests
append their PASS/FAIL lines to ``ACCEPTANCE_LINES``; a terminal-summary
hook prints them after the run so they are visible regardless of capture
settings.
"""
import pytest

from bubblelab import compute_constants, hyperbola_point, solve_ground_state

ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


@pytest.fixture(scope="session")
def record_criterion():
    """Callable: record_criterion(number, ok, detail) -> ok.

    Appends one PASS/FAIL line per acceptance criterion to the terminal
    summary and echoes it immediately for unbuffered runs.
    """
    def _record(number: int, ok: bool, detail: str) -> bool:
        line = "%s criterion %2d: %s" % ("PASS" if ok else "FAIL",
                                         number, detail)
        ACCEPTANCE_LINES.append(line)
        print(line)
        return ok

    return _record


# -- profile pairs -------------------------------------------------------------

@pytest.fixture(scope="session")
def gs_equal_n8():
    """p = q = 5/3 in dimension 8: both components coincide with the
    closed-form scalar bubble, which backs every closed-form oracle."""
    return solve_ground_state(hyperbola_point("5/3", 8))


@pytest.fixture(scope="session")
def gs_super_n8():
    """p = 3/2 in dimension 8, strictly between the Serrin and Sobolev
    thresholds (fast decay of both components)."""
    return solve_ground_state(hyperbola_point("3/2", 8))


@pytest.fixture(scope="session")
def gs_critical_n10():
    """p = q = 3/2 in dimension 10, the Sobolev-critical pair."""
    return solve_ground_state(hyperbola_point("3/2", 10))


@pytest.fixture(scope="session")
def gs_sub_n12():
    """p = 11/10 in dimension 12, below the Serrin threshold (the first
    component decays slower than r^{2-N})."""
    return solve_ground_state(hyperbola_point("1.1", 12))


# -- integral constants ----------------------------------------------------------

@pytest.fixture(scope="session")
def consts_equal_n8(gs_equal_n8):
    return compute_constants(gs_equal_n8)


@pytest.fixture(scope="session")
def consts_super_n8(gs_super_n8):
    return compute_constants(gs_super_n8)


@pytest.fixture(scope="session")
def consts_critical_n10(gs_critical_n10):
    return compute_constants(gs_critical_n10)


@pytest.fixture(scope="session")
def consts_sub_n12(gs_sub_n12):
    return compute_constants(gs_sub_n12)
