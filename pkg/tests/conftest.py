import numpy as np
import pytest

from iwnystrom.estimators import SampleSet
from iwnystrom.kernel import KernelSpec, gram


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_problem(rng, n=40, d=2, gamma=0.5):
    X = rng.normal(size=(n, d))
    y = np.sin(X.sum(axis=1)) + 0.1 * rng.normal(size=n)
    return SampleSet(X, y), KernelSpec(gamma)


def rbf_loop(gamma, A, B):
    """Double-loop reference Gram."""
    out = np.empty((len(A), len(B)))
    for i, a in enumerate(A):
        for j, b in enumerate(B):
            out[i, j] = np.exp(-gamma * np.sum((a - b) ** 2))
    return out


def random_gram(rng, n, gamma=0.5, d=2):
    X = rng.normal(size=(n, d))
    return gram(KernelSpec(gamma), X, X)


# one line per acceptance criterion, printed in the terminal summary
ACCEPTANCE_LINES = []


def report(criterion, title, passed, detail):
    line = f"[{'PASS' if passed else 'FAIL'}] criterion {criterion:>2}: {title}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[2].rstrip(":"))):
            terminalreporter.write_line(line)
