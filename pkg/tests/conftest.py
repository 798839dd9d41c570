import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def unit_columns(rng, d, n):
    G = rng.standard_normal((d, n))
    return G / np.linalg.norm(G, axis=0)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
