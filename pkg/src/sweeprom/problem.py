"""Problem definition: spatial mesh, angular quadrature, multigroup cross
sections, and the parametric two-group checkerboard configuration.

Material indices used throughout: 0 = background scatterer, 1 = absorber,
2 = source block (scatterer cross sections plus an isotropic external
source). All types are immutable after construction and safe to share
across threads.
"""

from __future__ import annotations

import hashlib
import json
import warnings
from dataclasses import dataclass, replace

import numpy as np

MAT_SCATTERER = 0
MAT_ABSORBER = 1
MAT_SOURCE = 2

# Reference parameter box of the checkerboard study; values outside are
# allowed but flagged as extrapolation.
THETA1_RANGE = (7.5, 12.5)
THETA2_RANGE = (0.5, 1.0)


class ConfigError(ValueError):
    """Invalid problem configuration; ``key`` names the offending entry."""

    def __init__(self, message, key=None):
        super().__init__(message)
        self.key = key


class ExtrapolationWarning(UserWarning):
    """Parameter point lies outside the reference training box."""


def is_extrapolating(theta1: float, theta2: float) -> bool:
    return not (
        THETA1_RANGE[0] <= theta1 <= THETA1_RANGE[1]
        and THETA2_RANGE[0] <= theta2 <= THETA2_RANGE[1]
    )


def warn_if_extrapolating(theta1, theta2, context=""):
    if is_extrapolating(theta1, theta2):
        where = f" in {context}" if context else ""
        warnings.warn(
            f"parameters (theta1={theta1}, theta2={theta2}){where} are outside "
            f"the reference ranges {THETA1_RANGE} x {THETA2_RANGE}; "
            "proceeding as extrapolation",
            ExtrapolationWarning,
            stacklevel=3,
        )


# The 7x7 block layout of the checkerboard benchmark: a central source
# block surrounded by 11 absorbing blocks, background scatterer elsewhere.
# Rows are listed top to bottom (visual orientation, y decreasing).
DEFAULT_LAYOUT = (
    (0, 0, 0, 0, 0, 0, 0),
    (0, 1, 0, 0, 0, 1, 0),
    (0, 0, 1, 0, 1, 0, 0),
    (0, 1, 0, 2, 0, 1, 0),
    (0, 0, 1, 0, 1, 0, 0),
    (0, 1, 0, 1, 0, 1, 0),
    (0, 0, 0, 0, 0, 0, 0),
)


@dataclass(frozen=True)
class ProblemConfig:
    """Full description of one parametric transport problem.

    ``layout`` is the block-level material grid with rows listed top to
    bottom; each block is ``block_size_cm`` wide and is subdivided into
    ``cells_per_block`` x ``cells_per_block`` mesh cells.
    """

    theta1: float = 10.0
    theta2: float = 0.75
    n_groups: int = 2
    cells_per_block: int = 3
    block_size_cm: float = 1.0
    layout: tuple = DEFAULT_LAYOUT
    n_polar: int = 4
    n_azimuthal: int = 8
    source_strength: float = 1.0
    source_group: int = 0
    gmres_tol: float = 1e-8
    gmres_restart: int = 30
    gmres_maxiter: int = 1000
    seed: int = 20250809

    def __post_init__(self):
        if self.theta1 <= 0:
            raise ConfigError(f"theta1 must be > 0, got {self.theta1}", key="theta1")
        if not 0.0 <= self.theta2 <= 1.0:
            raise ConfigError(
                f"theta2 must lie in [0, 1], got {self.theta2}", key="theta2"
            )
        if self.n_groups != 2:
            raise ConfigError(
                f"n_groups must be 2 for the checkerboard problem, got {self.n_groups}",
                key="n_groups",
            )
        if self.cells_per_block < 1:
            raise ConfigError(
                f"cells_per_block must be >= 1, got {self.cells_per_block}",
                key="cells_per_block",
            )
        if self.block_size_cm <= 0:
            raise ConfigError(
                f"block_size_cm must be > 0, got {self.block_size_cm}",
                key="block_size_cm",
            )
        rows = tuple(tuple(int(v) for v in row) for row in self.layout)
        if not rows or any(len(r) != len(rows[0]) for r in rows) or not rows[0]:
            raise ConfigError("layout must be a non-empty rectangular grid", key="layout")
        for row in rows:
            for v in row:
                if v not in (MAT_SCATTERER, MAT_ABSORBER, MAT_SOURCE):
                    raise ConfigError(
                        f"layout references undefined material index {v}", key="layout"
                    )
        object.__setattr__(self, "layout", rows)
        if self.source_group not in range(self.n_groups):
            raise ConfigError(
                f"source_group must be in [0, {self.n_groups}), got {self.source_group}",
                key="source_group",
            )
        if self.gmres_tol <= 0:
            raise ConfigError("gmres_tol must be > 0", key="gmres_tol")
        if self.gmres_restart < 1 or self.gmres_maxiter < 1:
            raise ConfigError(
                "gmres_restart and gmres_maxiter must be >= 1", key="gmres_restart"
            )

    def with_parameters(self, theta1, theta2) -> "ProblemConfig":
        return replace(self, theta1=float(theta1), theta2=float(theta2))

    def to_dict(self) -> dict:
        return {
            "theta1": self.theta1,
            "theta2": self.theta2,
            "n_groups": self.n_groups,
            "cells_per_block": self.cells_per_block,
            "block_size_cm": self.block_size_cm,
            "layout": [list(row) for row in self.layout],
            "quadrature": {"n_polar": self.n_polar, "n_azimuthal": self.n_azimuthal},
            "source": {"strength": self.source_strength, "group": self.source_group},
            "solver": {
                "gmres_tol": self.gmres_tol,
                "gmres_restart": self.gmres_restart,
                "gmres_maxiter": self.gmres_maxiter,
            },
            "sampling": {"seed": self.seed},
        }

    def fingerprint(self) -> str:
        """SHA-256 of the canonical JSON form; identifies the full problem."""
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()


@dataclass(frozen=True)
class Mesh:
    """Uniform rectangular cell grid with a per-cell material index.

    Cells are numbered ``c = iy * nx + ix`` with ``iy = 0`` the bottom row;
    ``material_map`` is derived from the block-level layout.
    """

    nx: int
    ny: int
    cell_width: float
    cell_height: float
    material_map: np.ndarray  # (nx*ny,) int64

    def __post_init__(self):
        if self.nx < 1 or self.ny < 1:
            raise ConfigError(f"cell counts must be >= 1, got {self.nx}x{self.ny}")
        if self.cell_width <= 0 or self.cell_height <= 0:
            raise ConfigError("cell dimensions must be > 0")
        mats = np.ascontiguousarray(np.asarray(self.material_map, dtype=np.int64))
        if mats.shape != (self.nx * self.ny,):
            raise ConfigError(
                f"material_map has {mats.size} entries, expected {self.nx * self.ny}"
            )
        mats.flags.writeable = False
        object.__setattr__(self, "material_map", mats)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny

    @property
    def extent(self) -> tuple:
        return (self.nx * self.cell_width, self.ny * self.cell_height)

    @property
    def cell_volume(self) -> float:
        return self.cell_width * self.cell_height


@dataclass(frozen=True)
class Quadrature:
    """Discrete-ordinates direction set: 2-D projections (mu, eta) of
    unit vectors with positive weights summing to 4*pi."""

    mu: np.ndarray
    eta: np.ndarray
    weight: np.ndarray

    def __post_init__(self):
        for name in ("mu", "eta", "weight"):
            arr = np.ascontiguousarray(np.asarray(getattr(self, name), dtype=np.float64))
            arr.flags.writeable = False
            object.__setattr__(self, name, arr)
        if not (self.mu.shape == self.eta.shape == self.weight.shape):
            raise ConfigError("quadrature arrays must have identical shapes")

    @property
    def n_directions(self) -> int:
        return self.mu.size


@dataclass(frozen=True)
class CrossSections:
    """Per-material multigroup data.

    sigma_t[m, g] is the total cross section, sigma_s[m, g, g'] the
    scattering transfer from group g into g' (isotropic), and q_ext[m, g]
    the isotropic external source density.
    """

    sigma_t: np.ndarray  # (n_materials, n_groups)
    sigma_s: np.ndarray  # (n_materials, n_groups, n_groups)
    q_ext: np.ndarray  # (n_materials, n_groups)

    def __post_init__(self):
        st = np.ascontiguousarray(np.asarray(self.sigma_t, dtype=np.float64))
        ss = np.ascontiguousarray(np.asarray(self.sigma_s, dtype=np.float64))
        qe = np.ascontiguousarray(np.asarray(self.q_ext, dtype=np.float64))
        if st.ndim != 2:
            raise ConfigError("sigma_t must be (n_materials, n_groups)")
        m, g = st.shape
        if ss.shape != (m, g, g) or qe.shape != (m, g):
            raise ConfigError(
                f"inconsistent cross-section shapes: sigma_t {st.shape}, "
                f"sigma_s {ss.shape}, q_ext {qe.shape}"
            )
        for arr in (st, ss, qe):
            arr.flags.writeable = False
        object.__setattr__(self, "sigma_t", st)
        object.__setattr__(self, "sigma_s", ss)
        object.__setattr__(self, "q_ext", qe)

    @property
    def n_materials(self) -> int:
        return self.sigma_t.shape[0]

    @property
    def n_groups(self) -> int:
        return self.sigma_t.shape[1]


def build_mesh(config: ProblemConfig) -> Mesh:
    """Realize the block layout as a cell-level mesh.

    Each layout block becomes cells_per_block x cells_per_block cells; the
    material assignment is deterministic given the config.
    """
    layout = config.layout
    n_by = len(layout)
    n_bx = len(layout[0])
    cpb = config.cells_per_block
    nx, ny = n_bx * cpb, n_by * cpb
    h = config.block_size_cm / cpb

    mats = np.empty(nx * ny, dtype=np.int64)
    for iy in range(ny):
        by = iy // cpb
        row = layout[n_by - 1 - by]  # layout rows are listed top to bottom
        for ix in range(nx):
            mats[iy * nx + ix] = row[ix // cpb]
    return Mesh(nx=nx, ny=ny, cell_width=h, cell_height=h, material_map=mats)


def build_quadrature(n_polar: int, n_azimuthal: int) -> Quadrature:
    """Product Gauss-Legendre (polar) x Chebyshev (azimuthal) set.

    ``n_polar`` counts the positive polar levels: a 2*n_polar Gauss-Legendre
    rule is folded onto the upper hemisphere with doubled weights (2-D
    symmetry in +-z). ``n_azimuthal`` angles are spread uniformly over 2*pi
    at phi = (2q+1)*pi/n_azimuthal and must split evenly over the four
    quadrants (multiple of 4) so that no direction grazes an axis.
    """
    if n_polar < 1 or n_azimuthal < 1:
        raise ConfigError(
            f"quadrature orders must be >= 1, got ({n_polar}, {n_azimuthal})"
        )
    if n_azimuthal % 4 != 0:
        raise ConfigError(
            f"n_azimuthal must be a multiple of 4 to avoid mu=0 or eta=0 "
            f"directions, got {n_azimuthal}"
        )
    nodes, wts = np.polynomial.legendre.leggauss(2 * n_polar)
    pos = nodes > 0
    xi = nodes[pos]  # cos(theta) of the upper-hemisphere levels
    w_pol = 2.0 * wts[pos]  # folded: lower hemisphere weight added
    phi = (2 * np.arange(n_azimuthal) + 1) * np.pi / n_azimuthal
    w_az = 2.0 * np.pi / n_azimuthal

    sin_th = np.sqrt(1.0 - xi**2)
    mu = np.outer(sin_th, np.cos(phi)).ravel()
    eta = np.outer(sin_th, np.sin(phi)).ravel()
    weight = np.repeat(w_pol * w_az, n_azimuthal)
    if np.any(mu == 0.0) or np.any(eta == 0.0):
        raise ConfigError(
            "quadrature produced a grazing direction (mu or eta exactly zero)"
        )
    return Quadrature(mu=mu, eta=eta, weight=weight)


def make_cross_sections(
    theta1: float,
    theta2: float,
    source_strength: float = 1.0,
    source_group: int = 0,
) -> CrossSections:
    """Two-group checkerboard cross sections at one parameter point.

    Scatterer: sigma_t = 1 in both groups, sigma_a = 0 exactly, with a
    down-scattering ratio theta2 (group-0 scattering splits 1-theta2 within
    group and theta2 into group 1; group 1 scatters fully within group).
    Absorber: sigma_t = theta1 in both groups, no scattering. The source
    material carries the scatterer cross sections plus an isotropic external
    source in ``source_group``.
    """
    if theta1 <= 0:
        raise ConfigError(f"theta1 must be > 0, got {theta1}", key="theta1")
    if not 0.0 <= theta2 <= 1.0:
        raise ConfigError(f"theta2 must lie in [0, 1], got {theta2}", key="theta2")

    sigma_t = np.array(
        [[1.0, 1.0], [theta1, theta1], [1.0, 1.0]]
    )
    scat = np.array([[1.0 - theta2, theta2], [0.0, 1.0]])
    sigma_s = np.stack([scat, np.zeros((2, 2)), scat])
    q_ext = np.zeros((3, 2))
    q_ext[MAT_SOURCE, source_group] = source_strength
    return CrossSections(sigma_t=sigma_t, sigma_s=sigma_s, q_ext=q_ext)
