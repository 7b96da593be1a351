import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)


def cofactor_det(a: np.ndarray) -> complex:
    """Brute-force Laplace expansion; the independent determinant oracle."""
    n = a.shape[0]
    if n == 0:
        return 1.0 + 0.0j
    if n == 1:
        return complex(a[0, 0])
    total = 0.0 + 0.0j
    for j in range(n):
        minor = np.delete(np.delete(a, 0, axis=0), j, axis=1)
        total += (-1) ** j * a[0, j] * cofactor_det(minor)
    return total


def random_complex(rng, shape):
    return rng.uniform(-1.0, 1.0, shape) + 1j * rng.uniform(-1.0, 1.0, shape)
