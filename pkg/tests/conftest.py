import pytest

from cubeshadow.subspace import orthonormalize


@pytest.fixture
def diag2():
    """E = span{(1,1)/sqrt2} in R^2."""
    return orthonormalize([[1.0, 1.0]])


@pytest.fixture
def diag3():
    """E = (1,1,1)-perp in R^3."""
    return orthonormalize([[1.0, -1.0, 0.0], [1.0, 1.0, -2.0]])

