import numpy as np
import pytest

import dfscontrol as dc

ION_CONTROLS = ["YXIXI", "YXZXZ", "YZZZZ", "ZIIYX", "ZIYIX", "ZZYZX", "ZZZYX"]
ION_GAMMA = 10.0 * np.pi / 3.0


@pytest.fixture(scope="session")
def ion_model():
    m = dc.build_ion_model(dc.IonModelParams(n=5, nu=19.0 / 3.0, mu=8.0 / 5.0, gamma_z=ION_GAMMA))
    return dc.attach_controls(m, ION_CONTROLS)


@pytest.fixture(scope="session")
def ion_basis():
    return dc.make_basis(32, "bloch_ball")


@pytest.fixture(scope="session")
def ion_gmodel(ion_model, ion_basis):
    return dc.liouvillian_to_g(ion_model, ion_basis)


@pytest.fixture(scope="session")
def ion_structure(ion_model, ion_basis):
    return dc.commutant_structure(dc.interaction_algebra(ion_model), ion_basis, seed=0)


@pytest.fixture(scope="session")
def ion_context(ion_gmodel, ion_structure):
    return dc.SchemeContext.for_sector(ion_gmodel, ion_structure, 3)


@pytest.fixture(scope="session")
def ion_p_proj(ion_structure):
    return dc.sector_projection(ion_structure, 3)


def random_density(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    rho = A @ A.conj().T
    return rho / np.trace(rho)


def random_hermitian(rng, n, scale=1.0):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return scale * (A + A.conj().T) / 2.0


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
