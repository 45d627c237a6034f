import warnings

import numpy as np
import pytest
from hypothesis import settings

from qpdyn.grid import centered_phase_grid, phase_grid
from qpdyn.states import CoherentStateSpec, coherent_state, superpose

settings.register_profile("qpdyn", deadline=None, max_examples=25)
settings.load_profile("qpdyn")


@pytest.fixture(scope="session")
def morse_grid():
    return phase_grid(256, -2.0, 50.0)


@pytest.fixture(scope="session")
def grid64():
    """64x64 grid around q = 4 that holds z(4, -2) in both q and p."""
    return phase_grid(64, -6.0, 14.0)


@pytest.fixture(scope="session")
def grid128():
    return phase_grid(128, -6.0, 14.0)


@pytest.fixture(scope="session")
def wide_grid():
    """Balanced 256-point grid holding both components of the two-Gaussian state and their rho."""
    return phase_grid(256, -18.0, 22.0)


@pytest.fixture(scope="session")
def balanced16():
    return centered_phase_grid(16, 0.0)


def z(pg, q0, p0):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return coherent_state(pg.q_axis, CoherentStateSpec(q0, p0))


def two_gaussians(pg):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        psi, _ = superpose([(1.0, z(pg, 4.0, -2.0)), (1.0, z(pg, -1.0, 5.0))])
    return psi


def random_complex(shape, seed=0):
    rng = np.random.default_rng(seed)
    return rng.standard_normal(shape) + 1j * rng.standard_normal(shape)
