"""Matrix-free transport operators built on cell-by-cell sweeps.

The scalar-flux unknown ("moment field") is stored flat in the canonical
ordering group-major, then cell (row-major in y then x), then local basis
index; shaped views are (n_groups, n_cells, 4). Angular fluxes
(n_groups, n_directions, n_cells, 4) exist only on test paths; the
production operator materializes a single per-direction slice at a time.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from . import dg
from .problem import CrossSections, Mesh, ProblemConfig, Quadrature
from .problem import build_mesh, build_quadrature, make_cross_sections

FOUR_PI = 4.0 * np.pi


class DiscretizationError(ValueError):
    """Singular local cell system or inconsistent discretization inputs."""


@njit(cache=True, nogil=True)
def _sweep_direction(q, ainv, mloc, fxa, fya, mats, nx, ny, xpos, ypos, out, leak_faces):
    """Solve one (group, direction) block of the loss operator.

    q, out: (n_cells, 4); ainv: (n_materials, 4, 4) inverted local systems;
    fxa/fya: inflow couplings; traversal follows the downwind order implied
    by the direction signs. Vacuum boundary: no inflow at domain edges.
    leak_faces: (4,) accumulator for the outgoing boundary face integrals
    of this direction, in the order west, east, south, north (unweighted
    by direction cosines; the caller applies |mu| dy etc.).
    """
    rhs = np.empty(4)
    y0, y1, dyi = (0, ny, 1) if ypos else (ny - 1, -1, -1)
    x0, x1, dxi = (0, nx, 1) if xpos else (nx - 1, -1, -1)
    for iy in range(y0, y1, dyi):
        for ix in range(x0, x1, dxi):
            c = iy * nx + ix
            for i in range(4):
                acc = 0.0
                for j in range(4):
                    acc += mloc[i, j] * q[c, j]
                rhs[i] = acc
            if xpos:
                if ix > 0:
                    cu = c - 1
                    for i in range(4):
                        acc = 0.0
                        for j in range(4):
                            acc += fxa[i, j] * out[cu, j]
                        rhs[i] += acc
            else:
                if ix < nx - 1:
                    cu = c + 1
                    for i in range(4):
                        acc = 0.0
                        for j in range(4):
                            acc += fxa[i, j] * out[cu, j]
                        rhs[i] += acc
            if ypos:
                if iy > 0:
                    cu = c - nx
                    for i in range(4):
                        acc = 0.0
                        for j in range(4):
                            acc += fya[i, j] * out[cu, j]
                        rhs[i] += acc
            else:
                if iy < ny - 1:
                    cu = c + nx
                    for i in range(4):
                        acc = 0.0
                        for j in range(4):
                            acc += fya[i, j] * out[cu, j]
                        rhs[i] += acc
            m = mats[c]
            for i in range(4):
                acc = 0.0
                for j in range(4):
                    acc += ainv[m, i, j] * rhs[j]
                out[c, i] = acc

    # outgoing boundary-face integrals of the bilinear trace: the mean of
    # the two face nodes times the face length (applied by the caller)
    if xpos:
        for iy in range(ny):
            c = iy * nx + (nx - 1)
            leak_faces[1] += 0.5 * (out[c, 1] + out[c, 3])
    else:
        for iy in range(ny):
            c = iy * nx
            leak_faces[0] += 0.5 * (out[c, 0] + out[c, 2])
    if ypos:
        for ix in range(nx):
            c = (ny - 1) * nx + ix
            leak_faces[3] += 0.5 * (out[c, 2] + out[c, 3])
    else:
        for ix in range(nx):
            c = ix
            leak_faces[2] += 0.5 * (out[c, 0] + out[c, 1])


@njit(cache=True, nogil=True)
def _apply_dlinv_iso(src, ainv, mloc, fx, fy, mu, eta, weight, mats,
                     nx, ny, dx, dy, psi_buf, out, leak):
    """Fused D L^-1 action for a direction-independent (isotropic) source.

    src, out: (n_groups, n_cells, 4); psi_buf: (n_cells, 4) scratch reused
    for every direction so the full angular flux is never stored. ``out``
    accumulates the quadrature-weighted scalar flux in a fixed direction
    order; ``leak`` (n_groups,) accumulates the net outgoing boundary flow.
    """
    n_groups = src.shape[0]
    n_dirs = mu.size
    n_cells = src.shape[1]
    faces = np.empty(4)
    for g in range(n_groups):
        for a in range(n_dirs):
            for i in range(4):
                faces[i] = 0.0
            _sweep_direction(src[g], ainv[g, a], mloc, fx[a], fy[a], mats,
                             nx, ny, mu[a] > 0.0, eta[a] > 0.0, psi_buf, faces)
            wa = weight[a]
            for c in range(n_cells):
                for k in range(4):
                    out[g, c, k] += wa * psi_buf[c, k]
            am = mu[a] if mu[a] > 0.0 else -mu[a]
            ae = eta[a] if eta[a] > 0.0 else -eta[a]
            leak[g] += wa * (am * dy * (faces[0] + faces[1])
                             + ae * dx * (faces[2] + faces[3]))


def apply_D(psi: np.ndarray, quadrature: Quadrature) -> np.ndarray:
    """Discrete-to-moment map: phi[g,c,k] = sum_a w_a psi[g,a,c,k].

    Reduction order over directions is fixed, so results are reproducible.
    """
    psi = np.asarray(psi, dtype=np.float64)
    return np.tensordot(quadrature.weight, psi, axes=([0], [1]))


def isotropic_scatter_source(phi, xs: CrossSections, material_map) -> np.ndarray:
    """(1/4pi) * S phi as a direction-independent (n_groups, n_cells, 4) array."""
    sig = xs.sigma_s[material_map]  # (n_cells, g_from, g_to)
    return np.einsum("cab,acK->bcK", sig, phi) / FOUR_PI


def apply_MS(phi, xs: CrossSections, material_map, n_directions: int) -> np.ndarray:
    """Moment-to-discrete scattering source, replicated over directions.

    Test-path helper; production code keeps the direction-independent form.
    """
    iso = isotropic_scatter_source(np.asarray(phi, dtype=np.float64), xs, material_map)
    return np.broadcast_to(iso[:, None, :, :], (iso.shape[0], n_directions) + iso.shape[1:]).copy()


class TransportOperator:
    """Action of (I - D L^-1 M S) and its right-hand side for one problem.

    ``apply`` and ``rhs`` each perform exactly one sweep (one full pass over
    all groups and directions); ``sweep_count`` tracks the total. Instances
    are read-only apart from that counter and may be invoked concurrently
    on disjoint state.
    """

    def __init__(self, mesh: Mesh, quadrature: Quadrature, xs: CrossSections):
        if xs.n_materials <= int(mesh.material_map.max()):
            raise DiscretizationError(
                f"mesh references material {int(mesh.material_map.max())} but the "
                f"cross-section table has {xs.n_materials} materials"
            )
        self.mesh = mesh
        self.quadrature = quadrature
        self.xs = xs
        self.n_groups = xs.n_groups
        self.sweep_count = 0

        nm, ng, na = xs.n_materials, xs.n_groups, quadrature.n_directions
        dx, dy = mesh.cell_width, mesh.cell_height
        mu, eta = quadrature.mu, quadrature.eta

        self._mloc = dg.local_mass_matrix(dx, dy)
        self._fx = np.empty((na, 4, 4))
        self._fy = np.empty((na, 4, 4))
        # layout (group, direction, material, ., .) keeps the per-direction
        # slice contiguous inside the sweep kernel
        self._ainv = np.empty((ng, na, nm, 4, 4))
        for a in range(na):
            self._fx[a] = dg.coupling_x(mu[a], dy)
            self._fy[a] = dg.coupling_y(eta[a], dx)
            for m in range(nm):
                for g in range(ng):
                    cell = dg.local_cell_matrix(mu[a], eta[a], xs.sigma_t[m, g], dx, dy)
                    try:
                        inv = np.linalg.inv(cell)
                    except np.linalg.LinAlgError:
                        inv = np.full((4, 4), np.nan)
                    if not np.all(np.isfinite(inv)) or np.linalg.cond(cell) > 1e13:
                        raise DiscretizationError(
                            f"singular local cell matrix for material {m}, group {g}, "
                            f"direction ({mu[a]:.4f}, {eta[a]:.4f}); check sigma_t and "
                            "cell dimensions"
                        )
                    self._ainv[g, a, m] = inv

    @classmethod
    def from_config(cls, config: ProblemConfig) -> "TransportOperator":
        mesh = build_mesh(config)
        quad = build_quadrature(config.n_polar, config.n_azimuthal)
        xs = make_cross_sections(
            config.theta1, config.theta2,
            source_strength=config.source_strength, source_group=config.source_group,
        )
        return cls(mesh, quad, xs)

    @property
    def n_moment(self) -> int:
        return self.n_groups * self.mesh.n_cells * dg.N_LOCAL

    @property
    def moment_shape(self) -> tuple:
        return (self.n_groups, self.mesh.n_cells, dg.N_LOCAL)

    def _as_moments(self, vec) -> np.ndarray:
        arr = np.ascontiguousarray(np.asarray(vec, dtype=np.float64))
        return arr.reshape(self.moment_shape)

    def _dlinv(self, src):
        """One sweep: returns (D L^-1 src, per-group boundary outflow)."""
        mesh, quad = self.mesh, self.quadrature
        out = np.zeros(self.moment_shape)
        leak = np.zeros(self.n_groups)
        psi_buf = np.empty((mesh.n_cells, dg.N_LOCAL))
        _apply_dlinv_iso(src, self._ainv, self._mloc, self._fx, self._fy,
                         quad.mu, quad.eta, quad.weight, mesh.material_map,
                         mesh.nx, mesh.ny, mesh.cell_width, mesh.cell_height,
                         psi_buf, out, leak)
        self.sweep_count += 1
        return out, leak

    def apply(self, phi) -> np.ndarray:
        """Operator action phi -> phi - D L^-1 M S phi (one sweep), flat."""
        phi_m = self._as_moments(phi)
        src = isotropic_scatter_source(phi_m, self.xs, self.mesh.material_map)
        scattered, _ = self._dlinv(src)
        return (phi_m - scattered).ravel()

    def rhs(self) -> np.ndarray:
        """Right-hand side D L^-1 M Q_e (one sweep), flat."""
        src = np.empty(self.moment_shape)
        src[:] = (self.xs.q_ext[self.mesh.material_map].T / FOUR_PI)[:, :, None]
        out, _ = self._dlinv(src)
        return out.ravel()

    def sweep_with_outflow(self, phi):
        """Re-sweep the full source built from phi.

        Returns the swept scalar flux and the per-group boundary outflow;
        for a converged phi the pair is the consistent solution used by
        the particle-balance check.
        """
        phi_m = self._as_moments(phi)
        src = isotropic_scatter_source(phi_m, self.xs, self.mesh.material_map)
        src += (self.xs.q_ext[self.mesh.material_map].T / FOUR_PI)[:, :, None]
        return self._dlinv(src)

    def apply_Linv(self, q: np.ndarray) -> np.ndarray:
        """Sweep an arbitrary angular source q (n_groups, n_dirs, n_cells, 4).

        Test/oracle path: materializes the full angular flux. Counts as one
        sweep.
        """
        q = np.ascontiguousarray(np.asarray(q, dtype=np.float64))
        ng, na = self.n_groups, self.quadrature.n_directions
        if q.shape != (ng, na, self.mesh.n_cells, dg.N_LOCAL):
            raise ValueError(f"angular source has shape {q.shape}")
        psi = np.empty_like(q)
        faces = np.empty(4)
        mu, eta = self.quadrature.mu, self.quadrature.eta
        for g in range(ng):
            for a in range(na):
                faces[:] = 0.0
                _sweep_direction(q[g, a], self._ainv[g, a], self._mloc,
                                 self._fx[a], self._fy[a], self.mesh.material_map,
                                 self.mesh.nx, self.mesh.ny,
                                 mu[a] > 0.0, eta[a] > 0.0, psi[g, a], faces)
        self.sweep_count += 1
        return psi


def particle_balance(phi, outflow, mesh: Mesh, xs: CrossSections) -> float:
    """Relative conservation residual |source - absorption - leakage| / source.

    ``phi`` must be the swept scalar flux consistent with ``outflow`` (both
    from :meth:`TransportOperator.sweep_with_outflow`). A zero-source
    problem returns 0 for the trivially balanced zero solution.
    """
    phi_m = np.asarray(phi, dtype=np.float64).reshape(xs.n_groups, mesh.n_cells, dg.N_LOCAL)
    vol = mesh.cell_volume
    # integral of a bilinear DG function over a cell: mean of the 4 nodal
    # coefficients times the cell volume
    cell_int = vol * phi_m.mean(axis=2)  # (n_groups, n_cells)
    sigma_a = xs.sigma_t - xs.sigma_s.sum(axis=2)  # (n_materials, n_groups)
    absorption = float(np.sum(sigma_a[mesh.material_map].T * cell_int))
    source = float(np.sum(xs.q_ext[mesh.material_map]) * vol)
    leakage = float(np.sum(outflow))
    residual = abs(source - absorption - leakage)
    if source == 0.0:
        return 0.0 if residual < 1e-14 else float("inf")
    return residual / source
