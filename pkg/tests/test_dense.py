"""Dense-oracle assembly structure and the direct solver."""

import numpy as np
import pytest

from sweeprom import dense, dg
from sweeprom.gmres import gmres_solve
from sweeprom.operators import TransportOperator
from sweeprom.problem import Mesh, build_quadrature, make_cross_sections
from conftest import one_group_xs, pure_absorber_xs


def test_single_cell_block_equals_sweep_local_matrix(quad8):
    # one cell, one direction: both formulations reduce to the same 4x4
    mesh = Mesh(nx=1, ny=1, cell_width=0.6, cell_height=0.8,
                material_map=np.zeros(1, dtype=np.int64))
    xs = pure_absorber_xs(sigma_t=2.0, n_groups=1)
    L = dense.assemble_dense_L(mesh, quad8, xs).matrix
    for a in range(quad8.n_directions):
        block = L[4 * a:4 * a + 4, 4 * a:4 * a + 4]
        expected = dg.local_cell_matrix(quad8.mu[a], quad8.eta[a], 2.0, 0.6, 0.8)
        np.testing.assert_allclose(block, expected, atol=1e-14)


def test_L_block_lower_triangular_under_sweep_order(quad8, mesh3x3, xs_two_group):
    L = dense.assemble_dense_L(mesh3x3, quad8, xs_two_group).matrix
    nx, ny, nloc = mesh3x3.nx, mesh3x3.ny, 4
    nc = nx * ny
    for g in range(2):
        for a in range(quad8.n_directions):
            xs_order = range(nx) if quad8.mu[a] > 0 else range(nx - 1, -1, -1)
            ys_order = range(ny) if quad8.eta[a] > 0 else range(ny - 1, -1, -1)
            cells = [iy * nx + ix for iy in ys_order for ix in xs_order]
            perm = np.concatenate([np.arange(c * nloc, (c + 1) * nloc) for c in cells])
            base = (g * quad8.n_directions + a) * nc * nloc
            block = L[base:base + nc * nloc, base:base + nc * nloc]
            reordered = block[np.ix_(perm, perm)]
            upper = np.triu(reordered, k=4)
            # strictly upper blocks vanish: no upstream dependence
            assert np.abs(upper[np.triu_indices_from(upper, k=4)]).max() == 0.0


def test_Linv_matches_sweep(quad8, mesh3x3, xs_two_group):
    rng = np.random.default_rng(21)
    op = TransportOperator(mesh3x3, quad8, xs_two_group)
    q = rng.normal(size=(2, quad8.n_directions, 9, 4))
    L = dense.assemble_dense_L(mesh3x3, quad8, xs_two_group)
    mass = dense.assemble_dense_mass(mesh3x3, quad8, 2)
    psi_dense = dense.dense_apply_Linv(L, mass, q)
    psi_sweep = op.apply_Linv(q).ravel()
    assert np.abs(psi_dense - psi_sweep).max() / np.abs(psi_dense).max() < 1e-12


class TestFullOperator:
    def test_pure_absorber_identity(self, quad8):
        mesh = Mesh(nx=2, ny=2, cell_width=0.4, cell_height=0.4,
                    material_map=np.zeros(4, dtype=np.int64))
        a = dense.assemble_full_operator(mesh, quad8, pure_absorber_xs())
        np.testing.assert_array_equal(a.matrix, np.eye(a.matrix.shape[0]))

    def test_columns_match_operator_probing(self, quad8, mesh3x3, xs_two_group):
        op = TransportOperator(mesh3x3, quad8, xs_two_group)
        a = dense.assemble_full_operator(mesh3x3, quad8, xs_two_group)
        rng = np.random.default_rng(22)
        for j in rng.choice(op.n_moment, size=6, replace=False):
            e = np.zeros(op.n_moment)
            e[j] = 1.0
            np.testing.assert_allclose(op.apply(e), a.matrix[:, j], atol=1e-13)

    def test_group_block_lower_triangular(self, quad8, mesh3x3, xs_two_group):
        # downscatter only: group 0 rows have no group 1 columns
        a = dense.assemble_full_operator(mesh3x3, quad8, xs_two_group).matrix
        half = a.shape[0] // 2
        assert np.abs(a[:half, half:]).max() == 0.0
        assert np.abs(a[half:, :half]).max() > 0.0

    def test_size_guard(self):
        quad = build_quadrature(4, 16)  # 64 directions
        mesh = Mesh(nx=10, ny=10, cell_width=0.1, cell_height=0.1,
                    material_map=np.zeros(100, dtype=np.int64))
        with pytest.raises(ValueError, match="guard"):
            dense.assemble_dense_L(mesh, quad, make_cross_sections(10.0, 0.5))


class TestDenseSolve:
    def test_identity(self):
        b = np.array([1.0, -2.0, 0.5])
        np.testing.assert_allclose(dense.dense_solve(np.eye(3), b), b)

    def test_diagonal(self):
        a = np.diag([2.0, 4.0])
        np.testing.assert_allclose(dense.dense_solve(a, np.array([2.0, 4.0])), [1.0, 1.0])

    def test_residual_small(self):
        rng = np.random.default_rng(23)
        a = rng.normal(size=(40, 40)) + 8 * np.eye(40)
        b = rng.normal(size=40)
        x = dense.dense_solve(a, b)
        assert np.linalg.norm(a @ x - b) <= 1e-12 * np.linalg.norm(b)

    def test_cross_check_with_gmres(self, quad4):
        from conftest import checkerboard_mesh
        mesh = checkerboard_mesh(3)
        xs = one_group_xs()
        op = TransportOperator(mesh, quad4, xs)
        b = op.rhs()
        a = dense.assemble_full_operator(mesh, quad4, xs)
        x_direct = dense.dense_solve(a, b)
        x_gmres, rep = gmres_solve(op.apply, b, tol=1e-11)
        assert rep.converged
        assert np.linalg.norm(x_direct - x_gmres) / np.linalg.norm(x_direct) < 1e-8

    def test_singularity_reported(self):
        a = np.array([[1.0, 2.0], [2.0, 4.0]])
        with pytest.raises(np.linalg.LinAlgError):
            dense.dense_solve(a, np.ones(2))

    def test_shape_mismatch(self):
        with pytest.raises(ValueError, match="shape"):
            dense.dense_solve(np.eye(3), np.ones(2))
