"""Shared fixtures: tiny problems for oracle comparisons and the
desk-scale checkerboard loaded from the shipped config."""

import numpy as np
import pytest

from sweeprom.configfile import load_default_config
from sweeprom.problem import CrossSections, Mesh, build_quadrature, make_cross_sections


@pytest.fixture(scope="session")
def desk_config():
    return load_default_config()


@pytest.fixture
def quad8():
    return build_quadrature(2, 4)


@pytest.fixture
def quad4():
    return build_quadrature(1, 4)


@pytest.fixture
def mesh3x3():
    # mixed scatterer / absorber / source cells
    mats = np.array([0, 1, 0, 2, 0, 1, 0, 0, 1], dtype=np.int64)
    return Mesh(nx=3, ny=3, cell_width=0.5, cell_height=0.7, material_map=mats)


@pytest.fixture
def xs_two_group():
    return make_cross_sections(9.3, 0.62)


def one_group_xs(sigma_t_scat=1.0, scatter_ratio=0.7, sigma_t_abs=8.0, source=1.0):
    """One-group material table: scatterer, absorber, source block."""
    return CrossSections(
        sigma_t=np.array([[sigma_t_scat], [sigma_t_abs], [sigma_t_scat]]),
        sigma_s=np.array([[[sigma_t_scat * scatter_ratio]], [[0.0]],
                          [[sigma_t_scat * scatter_ratio]]]),
        q_ext=np.array([[0.0], [0.0], [source]]),
    )


def pure_absorber_xs(sigma_t=2.0, n_groups=2, source=1.0):
    return CrossSections(
        sigma_t=np.full((1, n_groups), sigma_t),
        sigma_s=np.zeros((1, n_groups, n_groups)),
        q_ext=np.full((1, n_groups), source),
    )


def checkerboard_mesh(n_blocks=4, material_pattern=None):
    """Small mesh with alternating scatterer/absorber cells plus one source."""
    n = n_blocks
    mats = np.zeros(n * n, dtype=np.int64)
    for iy in range(n):
        for ix in range(n):
            if (ix + iy) % 2 == 1:
                mats[iy * n + ix] = 1
    mats[(n // 2) * n + n // 2] = 2
    return Mesh(nx=n, ny=n, cell_width=0.5, cell_height=0.5, material_map=mats)
