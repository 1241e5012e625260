import numpy as np
import pytest

from chanstruct.numerics import Tolerances

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)


@pytest.fixture
def tol():
    return Tolerances()


@pytest.fixture
def paulis():
    return I2, X, Y, Z
