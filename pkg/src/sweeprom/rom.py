"""Reduced-order-model pipeline: snapshot collection, POD basis, reduced
systems assembled through the sweep operator action, the offline library
over training parameters, and online interpolation plus reduced solve.

Offline, the full-order operator is applied to each retained mode (r
sweeps) and the right-hand side is formed (1 sweep) at every training
point; the resulting r x r systems are what the online phase interpolates,
so no sweeps remain online. Symmetric-positive-definite reduced matrices
(Petrov-Galerkin) are interpolated through the matrix logarithm so the
result stays SPD; right-hand sides and tangent matrices share one set of
radial-basis weights.
"""

from __future__ import annotations

import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lu_factor, lu_solve

from .fom import FomConvergenceError, solve_fom
from .operators import TransportOperator
from .problem import ProblemConfig, warn_if_extrapolating

PETROV_GALERKIN = "petrov-galerkin"
GALERKIN = "galerkin"

_DISTINCT_TOL = 1e-12


class RankDeficiencyError(np.linalg.LinAlgError):
    """AU lost full column rank; carries a condition estimate."""

    def __init__(self, message, cond=None):
        super().__init__(message)
        self.cond = cond


def worker_count() -> int:
    """Thread count for independent offline solves (env override only)."""
    raw = os.environ.get("SWEEPROM_NUM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


@dataclass(frozen=True)
class SnapshotMatrix:
    """Converged full-order solutions as columns, one per parameter."""

    matrix: np.ndarray  # (n_moment, n_snapshots)
    params: np.ndarray  # (n_snapshots, 2)
    fom_sweeps: int = 0  # operator applications spent collecting them

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=np.float64)
        par = np.asarray(self.params, dtype=np.float64)
        if mat.ndim != 2 or par.shape != (mat.shape[1], 2):
            raise ValueError(
                f"snapshot matrix {mat.shape} inconsistent with params {par.shape}"
            )
        if not np.all(np.isfinite(mat)):
            raise ValueError("snapshot matrix contains non-finite entries")
        object.__setattr__(self, "matrix", mat)
        object.__setattr__(self, "params", par)

    @property
    def n_snapshots(self) -> int:
        return self.matrix.shape[1]


@dataclass(frozen=True)
class ReducedBasis:
    """Orthonormal POD modes with the full singular spectrum."""

    modes: np.ndarray  # (n_moment, rank)
    singular_values: np.ndarray
    rank: int
    info: float  # retained-information fraction at this rank

    def __post_init__(self):
        u = np.asarray(self.modes, dtype=np.float64)
        sv = np.asarray(self.singular_values, dtype=np.float64)
        if u.shape[1] != self.rank:
            raise ValueError(f"modes {u.shape} do not match rank {self.rank}")
        object.__setattr__(self, "modes", u)
        object.__setattr__(self, "singular_values", sv)


@dataclass(frozen=True)
class ReducedSystem:
    """One r x r projected system at a parameter point."""

    a_r: np.ndarray
    b_r: np.ndarray
    param: tuple
    projection: str
    sweeps_used: int = 0


@dataclass
class RomLibrary:
    """Shared basis plus the reduced systems over the training set.

    Immutable after construction; online queries are read-only. The kernel
    factorization is rebuilt on demand (and after loading from disk).
    """

    basis: ReducedBasis
    params: np.ndarray  # (n_train, 2)
    systems: list
    bounds: np.ndarray  # (2, 2): [min, max] per parameter
    epsilon: float
    ridge: float
    projection: str
    tangents: np.ndarray | None  # (n_train, r, r) matrix logs, Petrov-Galerkin
    config: ProblemConfig
    offline_info: dict = field(default_factory=dict)
    _kernel_lu: tuple | None = field(default=None, repr=False, compare=False)

    @property
    def n_train(self) -> int:
        return self.params.shape[0]

    @property
    def rank(self) -> int:
        return self.basis.rank

    def normalize(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=np.float64))
        lo, hi = self.bounds[0], self.bounds[1]
        width = np.where(hi > lo, hi - lo, 1.0)
        return (pts - lo) / width

    def _ensure_kernel(self):
        if self._kernel_lu is None:
            mat = _augmented_kernel(self.normalize(self.params), self.epsilon, self.ridge)
            self._kernel_lu = lu_factor(mat)
        return self._kernel_lu


def collect_snapshots(params, config: ProblemConfig, workers=None) -> SnapshotMatrix:
    """Run the full-order model at every parameter point.

    Solves are independent and may run on ``workers`` threads; results are
    deterministic either way (zero initial guess, fixed orderings). Any
    non-converged solve aborts the collection naming the parameter.
    """
    params = np.atleast_2d(np.asarray(params, dtype=np.float64))
    if params.size == 0:
        raise ValueError("parameter list is empty")
    for t1, t2 in params:
        warn_if_extrapolating(t1, t2, context="snapshot collection")

    def _one(point):
        t1, t2 = point
        res = solve_fom(config.with_parameters(t1, t2), check_balance=False)
        if not res.report.converged:
            raise FomConvergenceError(
                f"FOM solve did not converge at (theta1={t1}, theta2={t2}): "
                f"relative residual {res.report.final_relative_residual:.3e} "
                f"after {res.report.iterations} iterations",
                theta1=t1, theta2=t2,
            )
        return res.phi, res.report.sweep_count

    n_workers = worker_count() if workers is None else workers
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_one, params))
    else:
        results = [_one(p) for p in params]
    columns = [phi for phi, _ in results]
    return SnapshotMatrix(matrix=np.column_stack(columns), params=params,
                          fom_sweeps=sum(c for _, c in results))


def info_retained(singular_values, r: int) -> float:
    """Fraction of squared singular-value mass kept by the first r modes."""
    sv = np.asarray(singular_values, dtype=np.float64)
    if r < 0 or r > sv.size:
        raise ValueError(f"rank {r} out of range for a spectrum of length {sv.size}")
    if r == 0:
        return 0.0
    total = float(np.sum(sv**2))
    if total == 0.0:
        raise ValueError("singular spectrum is identically zero")
    return float(np.sum(sv[:r] ** 2) / total)


def pod_basis(snapshots, rank=None, info_threshold=None) -> ReducedBasis:
    """Truncated SVD basis of a snapshot matrix.

    Exactly one of ``rank`` and ``info_threshold`` selects the truncation:
    a fixed mode count, or the smallest r whose retained information
    reaches the threshold.
    """
    x = snapshots.matrix if isinstance(snapshots, SnapshotMatrix) else np.asarray(snapshots, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n_cols = x.shape[1]
    if not np.any(x):
        raise ValueError("snapshot matrix is identically zero")
    if (rank is None) == (info_threshold is None):
        raise ValueError("specify exactly one of rank and info_threshold")

    u, sv, _ = np.linalg.svd(x, full_matrices=False)
    if rank is not None:
        if not 1 <= rank <= n_cols:
            raise ValueError(f"rank {rank} must lie in [1, {n_cols}] for {n_cols} snapshots")
        r = int(rank)
    else:
        if not 0.0 < info_threshold <= 1.0:
            raise ValueError(f"info_threshold must lie in (0, 1], got {info_threshold}")
        r = next(k for k in range(1, n_cols + 1) if info_retained(sv, k) >= info_threshold)
    return ReducedBasis(modes=u[:, :r], singular_values=sv, rank=r,
                        info=info_retained(sv, r))


def assemble_reduced(basis: ReducedBasis, operator: TransportOperator,
                     projection=PETROV_GALERKIN, param=None) -> ReducedSystem:
    """Form the reduced system through the operator action alone.

    Applies the operator to each mode (r sweeps) and forms the right-hand
    side (1 sweep): r + 1 sweeps total, recorded on the result. The
    assembled matrix is never needed.
    """
    if projection not in (PETROV_GALERKIN, GALERKIN):
        raise ValueError(f"unknown projection '{projection}'")
    u = basis.modes
    before = operator.sweep_count
    au = np.column_stack([operator.apply(u[:, j]) for j in range(basis.rank)])
    b = operator.rhs()
    sweeps = operator.sweep_count - before

    if projection == PETROV_GALERKIN:
        a_r = au.T @ au
        a_r = 0.5 * (a_r + a_r.T)
        b_r = au.T @ b
        cond = float(np.linalg.cond(a_r))
        eigmin = float(np.linalg.eigvalsh(a_r).min())
        if not np.isfinite(cond) or cond > 1e14 or eigmin <= 0.0:
            raise RankDeficiencyError(
                f"A U is rank deficient at param {param}: reduced matrix has "
                f"minimum eigenvalue {eigmin:.3e}, condition estimate {cond:.3e}",
                cond=cond,
            )
    else:
        a_r = u.T @ au
        b_r = u.T @ b
    return ReducedSystem(a_r=a_r, b_r=b_r,
                         param=tuple(param) if param is not None else (np.nan, np.nan),
                         projection=projection, sweeps_used=sweeps)


def _logm_spd(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    if w.min() <= 0.0:
        raise np.linalg.LinAlgError(
            f"matrix is not positive definite (min eigenvalue {w.min():.3e})"
        )
    return (v * np.log(w)) @ v.T


def _expm_sym(a: np.ndarray) -> np.ndarray:
    w, v = np.linalg.eigh(0.5 * (a + a.T))
    return (v * np.exp(w)) @ v.T


def _augmented_kernel(unit_pts, epsilon, ridge):
    """Gaussian kernel matrix with a constant polynomial tail.

    The constant-term constraint makes the interpolation weights sum to
    one, so constant data (and in particular a library of identical
    systems) is reproduced everywhere.
    """
    n = unit_pts.shape[0]
    d = np.linalg.norm(unit_pts[:, None, :] - unit_pts[None, :, :], axis=-1)
    k = np.exp(-((epsilon * d) ** 2))
    mat = np.zeros((n + 1, n + 1))
    mat[:n, :n] = k + ridge * np.eye(n)
    mat[:n, n] = 1.0
    mat[n, :n] = 1.0
    return mat


def _default_epsilon(unit_pts) -> float:
    d = np.linalg.norm(unit_pts[:, None, :] - unit_pts[None, :, :], axis=-1)
    iu = np.triu_indices(unit_pts.shape[0], 1)
    mean_d = float(d[iu].mean())
    return 1.0 / mean_d if mean_d > 0 else 1.0


def build_library(train_params, config: ProblemConfig, rank=None,
                  info_threshold=None, projection=PETROV_GALERKIN,
                  epsilon=None, ridge=0.0, workers=None) -> RomLibrary:
    """Offline phase: snapshots, one global basis, one reduced system per
    training point, and the interpolation data for the online phase.

    ``ridge`` (scaled by the kernel's mean diagonal) regularizes the
    radial-basis system; it defaults to zero and is escalated automatically
    only if the kernel solve is singular, so that training points are
    reproduced to solver precision whenever possible.
    """
    params = np.atleast_2d(np.asarray(train_params, dtype=np.float64))
    n_train = params.shape[0]
    if n_train < 2:
        raise ValueError(f"need at least 2 training points, got {n_train}")

    bounds = np.vstack([params.min(axis=0), params.max(axis=0)])
    width = np.where(bounds[1] > bounds[0], bounds[1] - bounds[0], 1.0)
    unit = (params - bounds[0]) / width
    dists = np.linalg.norm(unit[:, None, :] - unit[None, :, :], axis=-1)
    np.fill_diagonal(dists, np.inf)
    if dists.min() < _DISTINCT_TOL:
        i, j = np.unravel_index(int(np.argmin(dists)), dists.shape)
        raise ValueError(
            f"training parameters {tuple(params[i])} and {tuple(params[j])} "
            "coincide; training points must be pairwise distinct"
        )

    snapshots = collect_snapshots(params, config, workers=workers)
    basis = pod_basis(snapshots, rank=rank, info_threshold=info_threshold)

    def _assemble(point):
        t1, t2 = point
        op = TransportOperator.from_config(config.with_parameters(t1, t2))
        return assemble_reduced(basis, op, projection=projection, param=(t1, t2))

    n_workers = worker_count() if workers is None else workers
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            systems = list(pool.map(_assemble, params))
    else:
        systems = [_assemble(p) for p in params]

    eps = float(epsilon) if epsilon is not None else _default_epsilon(unit)
    tangents = None
    if projection == PETROV_GALERKIN:
        tangents = np.stack([_logm_spd(sys.a_r) for sys in systems])

    library = RomLibrary(
        basis=basis, params=params, systems=systems, bounds=bounds,
        epsilon=eps, ridge=float(ridge), projection=projection,
        tangents=tangents, config=config,
        offline_info={
            "n_snapshots": n_train,
            "rank": basis.rank,
            "fom_sweeps": snapshots.fom_sweeps,
            "assembly_sweeps": int(sum(s.sweeps_used for s in systems)),
        },
    )
    _validate_kernel(library)
    return library


def _validate_kernel(library: RomLibrary):
    """Factorize the kernel, escalating the ridge only if it is singular."""
    for attempt in range(4):
        try:
            lu = library._ensure_kernel()
        except np.linalg.LinAlgError:
            lu = None
        if lu is not None and np.all(np.isfinite(lu[0])):
            return
        library._kernel_lu = None
        trace_scale = 1.0  # Gaussian kernel has unit diagonal
        library.ridge = max(library.ridge * 100.0, 1e-12 * trace_scale)
        warnings.warn(
            f"radial-basis kernel is singular; retrying with ridge {library.ridge:.1e}",
            stacklevel=2,
        )
    raise np.linalg.LinAlgError("radial-basis kernel could not be factorized")


def _rbf_weights(library: RomLibrary, query_unit) -> np.ndarray:
    lu = library._ensure_kernel()
    unit = library.normalize(library.params)
    d = np.linalg.norm(unit - query_unit[None, :], axis=1)
    rhs = np.concatenate([np.exp(-((library.epsilon * d) ** 2)), [1.0]])
    return lu_solve(lu, rhs)[:-1]


def interpolate_system(library: RomLibrary, query) -> ReducedSystem:
    """Online reduced system at a new parameter point: no sweeps.

    Radial-basis weights are solved from the training kernel system; the
    Petrov-Galerkin matrices are combined in the tangent (log) space and
    mapped back through the exponential, so the result is symmetric
    positive definite by construction. Queries outside the training
    bounding box proceed with an extrapolation warning.
    """
    query = np.asarray(query, dtype=np.float64).ravel()
    if query.shape != (2,):
        raise ValueError(f"query must be a (theta1, theta2) pair, got shape {query.shape}")
    qu = library.normalize(query)[0]
    if np.any(qu < -1e-12) or np.any(qu > 1.0 + 1e-12):
        warnings.warn(
            f"query point {tuple(query)} lies outside the training bounding box; "
            "proceeding as extrapolation",
            stacklevel=2,
        )
    w = _rbf_weights(library, qu)

    b_r = np.tensordot(w, np.stack([s.b_r for s in library.systems]), axes=1)
    if library.projection == PETROV_GALERKIN:
        gamma = np.tensordot(w, library.tangents, axes=1)
        a_r = _expm_sym(gamma)
    else:
        a_r = np.tensordot(w, np.stack([s.a_r for s in library.systems]), axes=1)
    return ReducedSystem(a_r=a_r, b_r=b_r, param=tuple(query),
                         projection=library.projection, sweeps_used=0)


def rom_solve(system: ReducedSystem, basis: ReducedBasis):
    """Direct r x r solve plus reconstruction: (approximate field, coefficients)."""
    try:
        c = np.linalg.solve(system.a_r, system.b_r)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(f"reduced system is singular: {exc}")
    return basis.modes @ c, c
