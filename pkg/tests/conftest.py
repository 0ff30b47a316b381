import numpy as np
import pytest

from fei_lab.boolfn import BiasVector, TruthTable


def rand_table(rng, n):
    return TruthTable(np.where(rng.random(1 << n) < 0.5, -1, 1).astype(np.int8), n)


def rand_mu(rng, n, bound=0.9):
    return BiasVector(rng.uniform(-bound, bound, size=n))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE):
        terminalreporter.write_line(ACCEPTANCE[key])
