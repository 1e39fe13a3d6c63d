import numpy as np
import pytest
from hypothesis import settings

# fixed-seed, reproducible property runs
settings.register_profile("repo", derandomize=True, deadline=None, max_examples=60,
                          print_blob=True)
settings.load_profile("repo")


@pytest.fixture
def rng():
    return np.random.default_rng(20240607)


# one line per acceptance criterion, echoed after the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
