import numpy as np
import pytest

import nvism as nv


@pytest.fixture(scope="session")
def zgrid_small():
    return nv.make_grid(64, 8.0, "z")


@pytest.fixture(scope="session")
def kgrid_small():
    return nv.make_grid(64, 8.0, "k")


@pytest.fixture(scope="session")
def small_cfg():
    # coarse grids keep module tests fast; acceptance uses reference grids
    return nv.SolverConfig(z_n=64, z_s=8.0, k_n=64, k_max=8.0)


@pytest.fixture(scope="session")
def bump_potential(zgrid_small):
    gamma = nv.radial_bump_gamma(zgrid_small, 1.0, 3.0)
    return nv.gamma_to_potential(gamma)


@pytest.fixture(scope="session")
def gaussian_field():
    grid = nv.make_grid(128, 8.0, "z")
    return nv.ComplexField.from_function(grid, lambda x, y: np.exp(-(x**2 + y**2)))


def radial_profile_t(scale=1.0, width=2.0):
    """Synthetic Schwartz-class radial scattering profile |k| -> t0(|k|)."""
    def profile(r):
        r = np.asarray(r)
        return scale * r**2 * np.exp(-((r / width) ** 2))
    return profile


@pytest.fixture(scope="session")
def synthetic_radial_t(kgrid_small):
    profile = radial_profile_t()
    values = profile(kgrid_small.rho()).astype(np.complex128)
    values[kgrid_small.rho() >= 6.0] = 0.0
    return nv.ScatteringData(
        nv.ComplexField(kgrid_small, values), variant="plus", k_max=6.0
    )
