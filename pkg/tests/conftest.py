import numpy as np
import pytest


@pytest.fixture
def seeded():
    """Factory for bare Philox generators with an explicit seed."""
    return lambda seed: np.random.Generator(np.random.Philox(seed))


def pytest_terminal_summary(terminalreporter):
    from tests import test_acceptance

    lines = [test_acceptance.RESULTS[k] for k in sorted(test_acceptance.RESULTS)]
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
