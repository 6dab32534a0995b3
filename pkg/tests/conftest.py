import functools

import numpy as np
import pytest

from cliffordt import qcore

ACCEPTANCE_LINES: list[str] = []


def kron_embed(g, qubit, n):
    """Reference I (x) ... (x) g (x) ... (x) I with qubit 0 most significant."""
    factors = [np.eye(2)] * n
    factors[qubit] = g
    return functools.reduce(np.kron, factors)


def cz_pair(q, n):
    """Reference CZ on (q, q+1) built from Kronecker factors."""
    left = np.eye(1 << q)
    right = np.eye(1 << (n - q - 2))
    return np.kron(np.kron(left, qcore.CZ), right)


def random_unitary_2x2(rng):
    return qcore.haar_cue_sample(2, rng)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
