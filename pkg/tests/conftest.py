import numpy as np
import pytest

from absorbns.solver import RandomDivFree, realize_initial_condition
from absorbns.spectral import TorusGrid


@pytest.fixture
def grid32():
    return TorusGrid(32)


@pytest.fixture
def random_field(grid32):
    def make(seed=0, energy=1.0, exponent=-1.0):
        return realize_initial_condition(RandomDivFree(energy, exponent, seed), grid32)

    return make


def random_hermitian(grid, rng):
    """Coefficients of a random real (not divergence-free) vector field."""
    phys = rng.standard_normal((2, grid.n, grid.n))
    return np.fft.fft2(phys, axes=(1, 2)) / grid.n**2
