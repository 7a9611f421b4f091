import numpy as np
import pytest

from chac import model
from chac.spectral import GridSpec, SpectralBasis


@pytest.fixture(scope="session")
def desk_grid():
    return GridSpec(64, 256, 0.25)


@pytest.fixture(scope="session")
def desk_basis():
    return SpectralBasis(64, rho=1.0, qtilde=1.0)


@pytest.fixture(scope="session")
def small_grid():
    return GridSpec(32, 64, 0.25)


@pytest.fixture(scope="session")
def small_basis():
    return SpectralBasis(32, rho=1.0, qtilde=1.0)


@pytest.fixture
def default_params():
    return model.ModelParams()


@pytest.fixture
def linear_params():
    """Noise off, drift off: the exactly solvable configuration."""
    return model.ModelParams(sigma=model.sigma_constant(0.0), f_enabled=False)


@pytest.fixture
def constant_noise_params():
    """Constant diffusion, drift off: the Gaussian configuration."""
    return model.ModelParams(sigma=model.sigma_constant(0.5), f_enabled=False)


@pytest.fixture
def cosine(desk_grid):
    return np.cos(desk_grid.x)
