"""Brute-force dense assembly of the transport operators on tiny problems.

Verification oracle for the matrix-free paths: every matrix here is built
from its own quadrature-based evaluation of the bilinear DG stencil, not
from the closed-form local matrices the sweep uses, so a shared bug cannot
hide. Row/column indexing matches the canonical orderings: moment space
(group, cell, local) and angular space (group, direction, cell, local).
Deliberately stores what production code never may; guarded to tiny sizes.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgWarning, lu_factor, lu_solve

from .problem import CrossSections, Mesh, Quadrature

SIZE_GUARD = 20_000
_FOUR_PI = 4.0 * np.pi

# 2-point Gauss-Legendre on [0, 1]: exact for the (bi)quadratic integrands
# of bilinear basis products
_GQ = 0.5 + np.array([-1.0, 1.0]) / (2.0 * np.sqrt(3.0))
_GW = np.array([0.5, 0.5])


def _basis(k, s, t):
    # bilinear basis k = ix + 2*iy evaluated at reference coords (s, t)
    fx = s if k % 2 else 1.0 - s
    fy = t if k // 2 else 1.0 - t
    return fx * fy


def _basis_ds(k, s, t):
    fy = t if k // 2 else 1.0 - t
    return (1.0 if k % 2 else -1.0) * fy


def _basis_dt(k, s, t):
    fx = s if k % 2 else 1.0 - s
    return fx * (1.0 if k // 2 else -1.0)


def _local_mass(dx, dy):
    m = np.zeros((4, 4))
    for i in range(4):
        for j in range(4):
            for a, wa in zip(_GQ, _GW):
                for b, wb in zip(_GQ, _GW):
                    m[i, j] += wa * wb * _basis(i, a, b) * _basis(j, a, b)
    return dx * dy * m


def _local_cell(mu, eta, sigma_t, dx, dy):
    """Upwind DG cell block: sigma_t mass - streaming + outflow faces."""
    a = sigma_t * _local_mass(dx, dy)
    for i in range(4):
        for j in range(4):
            vol = 0.0
            for s, ws in zip(_GQ, _GW):
                for t, wt in zip(_GQ, _GW):
                    vol += ws * wt * _basis(j, s, t) * (
                        mu * _basis_ds(i, s, t) * dy + eta * _basis_dt(i, s, t) * dx
                    )
            a[i, j] -= vol
            face = 0.0
            sx = 1.0 if mu > 0 else 0.0  # outflow x-face of this cell
            sy = 1.0 if eta > 0 else 0.0
            for t, wt in zip(_GQ, _GW):
                face += abs(mu) * dy * wt * _basis(i, sx, t) * _basis(j, sx, t)
                face += abs(eta) * dx * wt * _basis(i, t, sy) * _basis(j, t, sy)
            a[i, j] += face
    return a


def _local_coupling(mu, eta, dx, dy, axis):
    """Inflow block against the upwind neighbor along ``axis``."""
    c = np.zeros((4, 4))
    if axis == "x":
        s_in = 0.0 if mu > 0 else 1.0  # own inflow face / neighbor outflow face
        for i in range(4):
            for j in range(4):
                for t, wt in zip(_GQ, _GW):
                    c[i, j] += abs(mu) * dy * wt * _basis(i, s_in, t) * _basis(j, 1.0 - s_in, t)
    else:
        t_in = 0.0 if eta > 0 else 1.0
        for i in range(4):
            for j in range(4):
                for s, ws in zip(_GQ, _GW):
                    c[i, j] += abs(eta) * dx * ws * _basis(i, s, t_in) * _basis(j, s, 1.0 - t_in)
    return c


@dataclass(frozen=True)
class DenseOperator:
    """Explicitly assembled operator with its index space."""

    matrix: np.ndarray
    space: str  # "angular" or "moment"


def _check_guard(mesh: Mesh, quad: Quadrature, n_groups):
    total = mesh.n_cells * quad.n_directions * n_groups * 4
    if total > SIZE_GUARD:
        raise ValueError(
            f"dense assembly of {total} angular unknowns exceeds the "
            f"{SIZE_GUARD} guard rail; the oracle is for tiny problems only"
        )


def assemble_dense_L(mesh: Mesh, quad: Quadrature, xs: CrossSections) -> DenseOperator:
    """Loss operator: block per (group, direction), upwind DG stencil."""
    ng = xs.n_groups
    _check_guard(mesh, quad, ng)
    nc = mesh.n_cells
    nloc = 4
    nang = ng * quad.n_directions * nc * nloc
    dx, dy = mesh.cell_width, mesh.cell_height
    L = np.zeros((nang, nang))
    for g in range(ng):
        for a in range(quad.n_directions):
            mu, eta = quad.mu[a], quad.eta[a]
            cx = _local_coupling(mu, eta, dx, dy, "x")
            cy = _local_coupling(mu, eta, dx, dy, "y")
            base = (g * quad.n_directions + a) * nc * nloc
            for iy in range(mesh.ny):
                for ix in range(mesh.nx):
                    c = iy * mesh.nx + ix
                    sig = xs.sigma_t[mesh.material_map[c], g]
                    r = base + c * nloc
                    L[r:r + nloc, r:r + nloc] = _local_cell(mu, eta, sig, dx, dy)
                    # inflow couplings move to the left-hand side with minus
                    ux = ix - 1 if mu > 0 else ix + 1
                    if 0 <= ux < mesh.nx:
                        cu = base + (iy * mesh.nx + ux) * nloc
                        L[r:r + nloc, cu:cu + nloc] -= cx
                    uy = iy - 1 if eta > 0 else iy + 1
                    if 0 <= uy < mesh.ny:
                        cu = base + (uy * mesh.nx + ix) * nloc
                        L[r:r + nloc, cu:cu + nloc] -= cy
    return DenseOperator(L, "angular")


def assemble_dense_mass(mesh: Mesh, quad: Quadrature, n_groups) -> DenseOperator:
    """Block-diagonal mass matrix weighting angular source densities."""
    _check_guard(mesh, quad, n_groups)
    nblocks = n_groups * quad.n_directions * mesh.n_cells
    mloc = _local_mass(mesh.cell_width, mesh.cell_height)
    m = np.kron(np.eye(nblocks), mloc)
    return DenseOperator(m, "angular")


def assemble_moment_to_discrete(mesh: Mesh, quad: Quadrature, n_groups) -> np.ndarray:
    """M: isotropic replication with the 1/4pi normalization."""
    nc, nloc = mesh.n_cells, 4
    nmom = n_groups * nc * nloc
    nang = n_groups * quad.n_directions * nc * nloc
    m = np.zeros((nang, nmom))
    for g in range(n_groups):
        for a in range(quad.n_directions):
            for ck in range(nc * nloc):
                row = (g * quad.n_directions + a) * nc * nloc + ck
                m[row, g * nc * nloc + ck] = 1.0 / _FOUR_PI
    return m


def assemble_scattering(mesh: Mesh, xs: CrossSections) -> np.ndarray:
    """S on moment space: group-to-group transfer per cell."""
    ng, nc, nloc = xs.n_groups, mesh.n_cells, 4
    s = np.zeros((ng * nc * nloc, ng * nc * nloc))
    for gto in range(ng):
        for gfrom in range(ng):
            for c in range(nc):
                sig = xs.sigma_s[mesh.material_map[c], gfrom, gto]
                for k in range(nloc):
                    s[(gto * nc + c) * nloc + k, (gfrom * nc + c) * nloc + k] = sig
    return s


def assemble_discrete_to_moment(mesh: Mesh, quad: Quadrature, n_groups) -> np.ndarray:
    """D: quadrature sum over directions."""
    nc, nloc = mesh.n_cells, 4
    nmom = n_groups * nc * nloc
    nang = n_groups * quad.n_directions * nc * nloc
    d = np.zeros((nmom, nang))
    for g in range(n_groups):
        for a in range(quad.n_directions):
            for ck in range(nc * nloc):
                d[g * nc * nloc + ck, (g * quad.n_directions + a) * nc * nloc + ck] = quad.weight[a]
    return d


def dense_apply_Linv(L: DenseOperator, mass: DenseOperator, q: np.ndarray) -> np.ndarray:
    """Reference sweep action: solve L psi = mass @ q for an angular source."""
    return dense_solve(L, mass.matrix @ np.asarray(q, dtype=np.float64).ravel())


def assemble_full_operator(mesh: Mesh, quad: Quadrature, xs: CrossSections) -> DenseOperator:
    """Explicit moment-space matrix of I - D L^-1 M S."""
    ng = xs.n_groups
    L = assemble_dense_L(mesh, quad, xs)
    mass = assemble_dense_mass(mesh, quad, ng)
    m2d = assemble_moment_to_discrete(mesh, quad, ng)
    s = assemble_scattering(mesh, xs)
    d = assemble_discrete_to_moment(mesh, quad, ng)
    rhs_block = mass.matrix @ (m2d @ s)
    y = np.linalg.solve(L.matrix, rhs_block)
    op = np.eye(s.shape[0]) - d @ y
    return DenseOperator(op, "moment")


def assemble_dense_rhs(mesh: Mesh, quad: Quadrature, xs: CrossSections) -> np.ndarray:
    """Explicit D L^-1 M Q_e in moment space."""
    ng = xs.n_groups
    nc, nloc = mesh.n_cells, 4
    qe = np.zeros(ng * nc * nloc)
    for g in range(ng):
        for c in range(nc):
            val = xs.q_ext[mesh.material_map[c], g]
            qe[(g * nc + c) * nloc:(g * nc + c) * nloc + nloc] = val
    L = assemble_dense_L(mesh, quad, xs)
    mass = assemble_dense_mass(mesh, quad, ng)
    m2d = assemble_moment_to_discrete(mesh, quad, ng)
    d = assemble_discrete_to_moment(mesh, quad, ng)
    psi = np.linalg.solve(L.matrix, mass.matrix @ (m2d @ qe))
    return d @ psi


def dense_solve(A, b) -> np.ndarray:
    """LU direct solve with one refinement step; reports singularity."""
    mat = A.matrix if isinstance(A, DenseOperator) else np.asarray(A, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64).ravel()
    if mat.shape[0] != mat.shape[1] or mat.shape[0] != b.size:
        raise ValueError(f"shape mismatch: A {mat.shape}, b {b.shape}")
    with warnings.catch_warnings():
        # an exactly-zero pivot only warns in scipy; promote it
        warnings.simplefilter("error", category=LinAlgWarning)
        try:
            lu = lu_factor(mat)
        except (np.linalg.LinAlgError, LinAlgWarning) as exc:
            raise np.linalg.LinAlgError(f"dense operator is singular: {exc}")
    with np.errstate(all="ignore"):
        x = lu_solve(lu, b)
    if not np.all(np.isfinite(x)):
        raise np.linalg.LinAlgError("dense operator is singular or badly scaled")
    x += lu_solve(lu, b - mat @ x)
    return x
