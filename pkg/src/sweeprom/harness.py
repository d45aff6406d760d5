"""End-to-end workflows behind the CLI: full-order solves, library
training, online evaluation against fresh full-order truth, and the
three-way cost comparison.

Timing methodology: every reported time is the median of at least three
repetitions. Full-order time covers the GMRES solve only (operator setup
excluded); reduced online time covers interpolation, the reduced solve,
and the reconstruction, with library load excluded.
"""

from __future__ import annotations

import platform
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path
from statistics import median

import numpy as np

from . import fieldio
from .fom import solve_fom
from .operators import TransportOperator
from .problem import ProblemConfig, warn_if_extrapolating
from .rom import (RomLibrary, assemble_reduced, build_library,
                  interpolate_system, rom_solve)
from .sampling import sample_parameters

TIMING_REPS = 3


def relative_l2_error(approx, reference) -> float:
    """|| approx - reference ||_2 / || reference ||_2 over the full field."""
    approx = np.asarray(approx, dtype=np.float64).ravel()
    reference = np.asarray(reference, dtype=np.float64).ravel()
    ref_norm = float(np.linalg.norm(reference))
    if ref_norm == 0.0:
        return 0.0 if float(np.linalg.norm(approx)) == 0.0 else float("inf")
    return float(np.linalg.norm(approx - reference)) / ref_norm


def timed_median(fn, reps=TIMING_REPS):
    """Run ``fn`` at least ``reps`` times; returns (last result, median seconds)."""
    times = []
    result = None
    for _ in range(max(reps, 1)):
        t0 = time.perf_counter()
        result = fn()
        times.append(time.perf_counter() - t0)
    return result, median(times)


def environment_fingerprint() -> dict:
    return {
        "python": sys.version.split()[0],
        "numpy": np.__version__,
        "platform": platform.platform(),
        "machine": platform.machine(),
    }


@dataclass
class EvalReport:
    """Per-point errors and timings plus their aggregates."""

    rows: list
    mean_error: float
    max_error: float
    mean_speedup: float
    environment: dict = field(default_factory=environment_fingerprint)


def run_train(config: ProblemConfig, sampler: str, n_snapshots: int,
              rank=None, info_threshold=None, projection="petrov-galerkin",
              seed=None, log=print) -> RomLibrary:
    """Offline phase: sample training points, build and report the library."""
    seed = config.seed if seed is None else seed
    samples = sample_parameters(sampler, n_snapshots, seed)
    library = build_library(
        samples.points, config,
        rank=rank, info_threshold=info_threshold, projection=projection,
    )
    sv = library.basis.singular_values
    info = library.offline_info
    log(f"training points: {n_snapshots} ({sampler}, seed {seed})")
    log("singular values: " + " ".join(f"{v:.6e}" for v in sv))
    log(f"rank {library.rank}, information retained {library.basis.info:.12f}")
    log(f"offline sweeps: {info['fom_sweeps']} (FOM solves) + "
        f"{info['assembly_sweeps']} (reduced assembly) = "
        f"{info['fom_sweeps'] + info['assembly_sweeps']}")
    return library


def _rom_online(library: RomLibrary, point):
    system = interpolate_system(library, point)
    phi, _ = rom_solve(system, library.basis)
    return phi


def run_eval(library: RomLibrary, test_points, outdir=None, log=print) -> EvalReport:
    """Online phase against fresh full-order truth at every test point.

    Writes, when ``outdir`` is given, the report CSV/JSON plus per-point
    field files for the full-order solution, the reduced solution, and the
    pointwise relative error.
    """
    test_points = np.atleast_2d(np.asarray(test_points, dtype=np.float64))
    if test_points.size == 0:
        raise ValueError("test set is empty")
    config = library.config
    outdir = Path(outdir) if outdir is not None else None
    if outdir is not None:
        outdir.mkdir(parents=True, exist_ok=True)

    rows = []
    for idx, point in enumerate(test_points):
        t1, t2 = float(point[0]), float(point[1])
        warn_if_extrapolating(t1, t2, context="evaluation")
        point_config = config.with_parameters(t1, t2)
        op = TransportOperator.from_config(point_config)
        fom_res, fom_time = timed_median(
            lambda: solve_fom(point_config, operator=op, check_balance=False)
        )
        fom_sweeps = fom_res.report.sweep_count
        phi_rom, rom_time = timed_median(lambda: _rom_online(library, point))
        err = relative_l2_error(phi_rom, fom_res.phi)
        rows.append({
            "point_index": idx, "theta1": t1, "theta2": t2,
            "rel_l2_error": err, "fom_time_s": fom_time, "rom_time_s": rom_time,
            "speedup": fom_time / rom_time if rom_time > 0 else float("inf"),
            "fom_sweeps": fom_sweeps, "rom_sweeps": 0,
        })
        if outdir is not None:
            mesh = op.mesh
            shape = dict(nx=mesh.nx, ny=mesh.ny, n_groups=op.n_groups)
            denom = np.maximum(np.abs(fom_res.phi), 1e-12 * np.abs(fom_res.phi).max())
            err_field = np.abs(phi_rom - fom_res.phi) / denom
            fieldio.write_field(outdir / f"point_{idx:03d}_fom.field", fom_res.phi, **shape)
            fieldio.write_field(outdir / f"point_{idx:03d}_rom.field", phi_rom, **shape)
            fieldio.write_field(outdir / f"point_{idx:03d}_err.field", err_field, **shape)
        log(f"point {idx}: theta=({t1:.4f}, {t2:.4f}) rel_l2_error={err:.3e} "
            f"speedup={rows[-1]['speedup']:.1f}")

    errors = [r["rel_l2_error"] for r in rows]
    speedups = [r["speedup"] for r in rows]
    report = EvalReport(
        rows=rows,
        mean_error=float(np.mean(errors)),
        max_error=float(np.max(errors)),
        mean_speedup=float(np.mean(speedups)),
    )
    if outdir is not None:
        aggregates = {
            "mean_theta1": float(np.mean([r["theta1"] for r in rows])),
            "mean_theta2": float(np.mean([r["theta2"] for r in rows])),
            "mean_rel_l2_error": report.mean_error,
            "mean_fom_time_s": float(np.mean([r["fom_time_s"] for r in rows])),
            "mean_rom_time_s": float(np.mean([r["rom_time_s"] for r in rows])),
            "mean_speedup": report.mean_speedup,
            "mean_fom_sweeps": float(np.mean([r["fom_sweeps"] for r in rows])),
            "mean_rom_sweeps": 0.0,
        }
        sidecar = {
            "n_snapshots": library.offline_info.get("n_snapshots", library.n_train),
            "rank": library.rank,
            "projection": library.projection,
            "mean_rel_l2_error": report.mean_error,
            "max_rel_l2_error": report.max_error,
            "mean_speedup": report.mean_speedup,
            "environment": report.environment,
        }
        fieldio.write_eval_report(outdir / "report.csv", rows, aggregates, sidecar)
    log(f"mean rel_l2_error {report.mean_error:.3e}, max {report.max_error:.3e}, "
        f"mean speedup {report.mean_speedup:.1f}")
    return report


@dataclass(frozen=True)
class CompareResult:
    """FOM vs sweep-online reduced model vs interpolated reduced model."""

    fom_time_s: float
    minimally_invasive_time_s: float
    interpolated_time_s: float
    minimally_invasive_error: float
    interpolated_error: float
    minimally_invasive_sweeps: int
    interpolated_sweeps: int
    fom_sweeps: int


def run_compare(library: RomLibrary, point, log=print) -> CompareResult:
    """Three solves at one test point.

    The sweep-online path assembles the reduced system at the query with
    r + 1 fresh operator applications before solving; the interpolated
    path touches no sweeps at all. Errors are reported against the
    full-order solution without asserting an ordering between them.
    """
    point = np.asarray(point, dtype=np.float64).ravel()
    t1, t2 = float(point[0]), float(point[1])
    warn_if_extrapolating(t1, t2, context="comparison")
    config = library.config.with_parameters(t1, t2)
    op = TransportOperator.from_config(config)

    fom_res, fom_time = timed_median(
        lambda: solve_fom(config, operator=op, check_balance=False)
    )

    def _mi():
        system = assemble_reduced(library.basis, op, projection=library.projection,
                                  param=(t1, t2))
        phi, _ = rom_solve(system, library.basis)
        return phi, system

    (phi_mi, sys_mi), mi_time = timed_median(_mi)
    mi_sweeps = sys_mi.sweeps_used

    phi_rom, rom_time = timed_median(lambda: _rom_online(library, point))

    result = CompareResult(
        fom_time_s=fom_time,
        minimally_invasive_time_s=mi_time,
        interpolated_time_s=rom_time,
        minimally_invasive_error=relative_l2_error(phi_mi, fom_res.phi),
        interpolated_error=relative_l2_error(phi_rom, fom_res.phi),
        minimally_invasive_sweeps=mi_sweeps,
        interpolated_sweeps=0,
        fom_sweeps=fom_res.report.sweep_count,
    )
    log(f"query point: theta1={t1}, theta2={t2}")
    log(f"  FOM:                   {result.fom_time_s:.4e} s "
        f"({result.fom_sweeps} sweeps)")
    log(f"  sweep-online reduced:  {result.minimally_invasive_time_s:.4e} s "
        f"({result.minimally_invasive_sweeps} sweeps), "
        f"error {result.minimally_invasive_error:.3e}")
    log(f"  interpolated reduced:  {result.interpolated_time_s:.4e} s "
        f"(0 sweeps), error {result.interpolated_error:.3e}")
    return result


def sample_test_points(library: RomLibrary, sampler: str, count: int, seed: int):
    """Test points drawn over the library's own training bounds."""
    return sample_parameters(sampler, count, seed, bounds=library.bounds).points
