import numpy as np
import pytest

from ccare.model import bundled_problem

# Extremal solutions of the bundled example, as printed to 8 decimals.
X_MINUS = (
    np.array([[0.0, 0.0], [0.0, 0.28204532]]),
    np.array([[0.0, 0.0], [0.0, 0.27641488]]),
)
X_PLUS = (
    np.array([[0.50718185, 0.24899225], [0.24899225, 0.45594482]]),
    np.array([[0.32609148, -0.16073063], [-0.16073063, 0.48929635]]),
)
A1 = np.array([[1.0, -2.0], [0.0, -1.0]])
A2 = np.array([[1.0, -1.0], [0.0, -3.0]])


@pytest.fixture(scope="session")
def example1():
    return bundled_problem("ivanov_example1")


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)
