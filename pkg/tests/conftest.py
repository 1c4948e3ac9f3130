"""Shared meshes, forms and models."""

import numpy as np
import pytest

from vortexpatch.core.mesh import assemble, build_disk_mesh, build_interval_mesh, build_rect_mesh
from vortexpatch.core.model import NonlinearityModel


@pytest.fixture(scope="session")
def square_forms():
    return assemble(build_rect_mesh(16, 16))


@pytest.fixture(scope="session")
def small_square_forms():
    return assemble(build_rect_mesh(8, 8))


@pytest.fixture(scope="session")
def interval_forms():
    return assemble(build_interval_mesh(64))


@pytest.fixture(scope="session")
def disk_forms():
    return assemble(build_disk_mesh(8))


@pytest.fixture(scope="session")
def pb_model():
    return NonlinearityModel.prandtl_batchelor()


@pytest.fixture(scope="session")
def power_model():
    return NonlinearityModel.create("power", a1=1.0, a2=0.5, p=1.5)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def random_interior_field(forms, rng, high=2.0):
    """Uniform [0, high) values with exact boundary zeros."""
    u = rng.uniform(0.0, high, forms.n)
    u[forms.mesh.boundary_mask] = 0.0
    return u
