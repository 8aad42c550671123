import numpy as np
import pytest

from itkmlab.dictionary import Dictionary


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_dictionary(rng, d, K):
    M = rng.standard_normal((d, K))
    return Dictionary(M / np.linalg.norm(M, axis=0))


# Acceptance verdicts, one line per criterion, collected by tests/test_acceptance.py
ACCEPTANCE_LINES: list = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
