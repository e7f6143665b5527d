import numpy as np
import pytest

from sqarray.core import AuxiliaryBlockDesign, cyclic_auxiliary, load_design, to_square_array
from sqarray.fixtures import resolve
from sqarray.randgroup import closure_from_generators, load_generators

# lines recorded by the acceptance module, echoed in the terminal summary
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def random_rectangle(rng, t, k):
    """k rows of a Latin square with shuffled rows, columns and symbols."""
    base = (np.arange(t)[:, None] + np.arange(t)[None, :]) % t
    base = base[rng.permutation(t)][:, rng.permutation(t)]
    symbols = rng.permutation(t) + 1
    return AuxiliaryBlockDesign(t, k, symbols[base[:k]])


def random_square(rng, t, k):
    return to_square_array(random_rectangle(rng, t, k))


def fixture_design(name):
    return load_design(resolve(name))


@pytest.fixture(scope="session")
def fig2b():
    return to_square_array(cyclic_auxiliary(12, [0, 3, 7]))


@pytest.fixture(scope="session")
def psl211():
    return closure_from_generators(12, load_generators(resolve("psl_2_11.json")))


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
