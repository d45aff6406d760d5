"""Acceptance suite: every exit criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with ``pytest -s`` to see them
stream). Desk scale means the shipped checkerboard config: 21x21 cells,
32 directions, two groups. The full-scale study numbers are out of reach
at this size; these are the scaled equivalents with property checks.
"""

import time
import warnings

import numpy as np
import pytest

from sweeprom import dense
from sweeprom.fom import solve_fom
from sweeprom.gmres import gmres_solve
from sweeprom.operators import TransportOperator
from sweeprom.problem import CrossSections, Mesh, build_quadrature
from sweeprom.rom import (PETROV_GALERKIN, ReducedBasis, assemble_reduced,
                          build_library, collect_snapshots, info_retained,
                          interpolate_system, rom_solve)
from sweeprom.harness import relative_l2_error, run_compare, run_eval
from sweeprom.sampling import sample_parameters
from test_rom import random_orthonormal, synthetic_library

_SESSION_T0 = time.perf_counter()
RANK = 5
N_TEST = 10


def _report(name, ok, detail=""):
    line = f"[{'PASS' if ok else 'FAIL'}] {name}"
    if detail:
        line += f" -- {detail}"
    print("\n" + line)
    assert ok, line


def _mixed_material_map(nx, ny):
    mats = np.zeros(nx * ny, dtype=np.int64)
    for iy in range(ny):
        for ix in range(nx):
            if (ix + iy) % 2 == 1:
                mats[iy * nx + ix] = 1
    mats[(ny // 2) * nx + nx // 2] = 2
    return mats


def _xs_for(n_groups, theta1, theta2):
    if n_groups == 2:
        from sweeprom.problem import make_cross_sections
        return make_cross_sections(theta1, theta2)
    scat = theta2 * 0.99  # keep the one-group scattering ratio below one
    return CrossSections(
        sigma_t=np.array([[1.0], [theta1], [1.0]]),
        sigma_s=np.array([[[scat]], [[0.0]], [[scat]]]),
        q_ext=np.array([[0.0], [0.0], [1.0]]),
    )


@pytest.fixture(scope="module")
def libraries(desk_config):
    libs = {}
    for n_snap in (25, 50):
        pts = sample_parameters("uniform", n_snap, desk_config.seed).points
        libs[n_snap] = build_library(pts, desk_config, rank=RANK)
    return libs


@pytest.fixture(scope="module")
def test_points(desk_config):
    return sample_parameters("uniform", N_TEST, desk_config.seed + 1).points


def test_01_oracle_equivalence(desk_config):
    """Matrix-free operator, RHS, and GMRES against the dense oracle."""
    t0 = time.perf_counter()
    rng = np.random.default_rng(101)
    cases = [
        (1, (1, 4), 1, 1), (1, (2, 4), 2, 3),
        (2, (1, 4), 3, 3), (2, (2, 4), 4, 4),
    ]
    worst_op, worst_rhs, worst_solve = 0.0, 0.0, 0.0
    for n_groups, (npol, naz), nx, ny in cases:
        quad = build_quadrature(npol, naz)
        mesh = Mesh(nx=nx, ny=ny, cell_width=0.45, cell_height=0.55,
                    material_map=_mixed_material_map(nx, ny))
        for _ in range(5):
            theta1 = rng.uniform(7.5, 12.5)
            theta2 = rng.uniform(0.5, 1.0)
            xs = _xs_for(n_groups, theta1, theta2)
            op = TransportOperator(mesh, quad, xs)
            a = dense.assemble_full_operator(mesh, quad, xs)
            phi = rng.normal(size=op.n_moment)
            ref = a.matrix @ phi
            worst_op = max(worst_op,
                           np.abs(op.apply(phi) - ref).max() / np.abs(ref).max())
            b_ref = dense.assemble_dense_rhs(mesh, quad, xs)
            worst_rhs = max(worst_rhs,
                            np.abs(op.rhs() - b_ref).max() / np.abs(b_ref).max())
            x_ref = dense.dense_solve(a, b_ref)
            x, rep = gmres_solve(op.apply, op.rhs(), tol=1e-10)
            assert rep.converged
            worst_solve = max(worst_solve,
                              np.linalg.norm(x - x_ref) / np.linalg.norm(x_ref))
    elapsed = time.perf_counter() - t0
    ok = worst_op < 1e-12 and worst_rhs < 1e-12 and worst_solve < 1e-8 and elapsed < 30
    _report("oracle equivalence",
            ok,
            f"operator {worst_op:.2e} (<1e-12), rhs {worst_rhs:.2e} (<1e-12), "
            f"gmres {worst_solve:.2e} (<1e-8), {elapsed:.1f}s (<30s)")


def test_02_conservation(desk_config):
    """Converged desk-scale solve balances source, absorption, leakage."""
    t0 = time.perf_counter()
    assert desk_config.cells_per_block == 3
    assert desk_config.n_polar * desk_config.n_azimuthal >= 32
    res = solve_fom(desk_config)
    elapsed = time.perf_counter() - t0
    ok = res.report.converged and res.balance_residual < 1e-6 and elapsed < 120
    _report("conservation",
            ok,
            f"balance residual {res.balance_residual:.2e} (<1e-6), "
            f"{elapsed:.1f}s (<120s)")


def test_03_pod_properties(libraries):
    """Orthonormal modes; retained information well behaved; hand check."""
    basis = libraries[25].basis
    gram_dev = np.abs(basis.modes.T @ basis.modes - np.eye(basis.rank)).max()
    sv = basis.singular_values
    infos = np.array([info_retained(sv, r) for r in range(sv.size + 1)])
    monotone = np.all(np.diff(infos) >= 0.0)
    complete = abs(infos[-1] - 1.0) < 1e-14
    hand = abs(info_retained([2.0, 1.0], 1) - 0.8) < 1e-15
    ok = gram_dev < 1e-10 and monotone and complete and hand
    _report("POD properties",
            ok,
            f"||U^T U - I|| {gram_dev:.2e} (<1e-10), monotone {monotone}, "
            f"I(N_s)-1 {infos[-1] - 1:.1e} (<1e-14), I(1)=0.8 check {hand}")


def test_04_minimally_invasive_consistency(quad8, mesh3x3, xs_two_group):
    """Sweep-assembled reduced system equals the dense products; r+1 sweeps."""
    op = TransportOperator(mesh3x3, quad8, xs_two_group)
    a_dense = dense.assemble_full_operator(mesh3x3, quad8, xs_two_group).matrix
    b_dense = dense.assemble_dense_rhs(mesh3x3, quad8, xs_two_group)
    u = random_orthonormal(op.n_moment, 4, seed=104)
    basis = ReducedBasis(modes=u, singular_values=np.ones(4), rank=4, info=1.0)
    before = op.sweep_count
    sys = assemble_reduced(basis, op, projection=PETROV_GALERKIN)
    sweeps = op.sweep_count - before
    au = a_dense @ u
    dev_a = np.abs(sys.a_r - au.T @ au).max()
    dev_b = np.abs(sys.b_r - au.T @ b_dense).max()
    ok = dev_a < 1e-10 and dev_b < 1e-10 and sweeps == 5
    _report("minimally-invasive consistency",
            ok,
            f"|A_r - (AU)^T AU| {dev_a:.2e} (<1e-10), "
            f"|b_r - (AU)^T b| {dev_b:.2e} (<1e-10), sweeps {sweeps} (= r+1 = 5)")


def test_05_petrov_galerkin_least_squares(quad8, mesh3x3, xs_two_group):
    """Reduced coefficients match an independent dense least-squares solve."""
    op = TransportOperator(mesh3x3, quad8, xs_two_group)
    a_dense = dense.assemble_full_operator(mesh3x3, quad8, xs_two_group).matrix
    b_dense = dense.assemble_dense_rhs(mesh3x3, quad8, xs_two_group)
    u = random_orthonormal(op.n_moment, 5, seed=105)
    basis = ReducedBasis(modes=u, singular_values=np.ones(5), rank=5, info=1.0)
    sys = assemble_reduced(basis, op, projection=PETROV_GALERKIN)
    _, c = rom_solve(sys, basis)
    c_ls, *_ = np.linalg.lstsq(a_dense @ u, b_dense, rcond=None)
    dev = np.abs(c - c_ls).max()
    ok = dev < 1e-8
    _report("Petrov-Galerkin = least squares", ok, f"|c - c_ls| {dev:.2e} (<1e-8)")


def test_06_library_interpolation(libraries):
    """Training-point reproduction, SPD on a query grid, geometric mean."""
    worst_reprod = 0.0
    for n_snap, lib in libraries.items():
        for i, p in enumerate(lib.params):
            sys = interpolate_system(lib, p)
            worst_reprod = max(worst_reprod,
                               np.abs(sys.a_r - lib.systems[i].a_r).max(),
                               np.abs(sys.b_r - lib.systems[i].b_r).max())
    lib = libraries[25]
    spd_ok = True
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        for t1 in np.linspace(7.5, 12.5, 10):
            for t2 in np.linspace(0.5, 1.0, 10):
                sys = interpolate_system(lib, (t1, t2))
                if (np.abs(sys.a_r - sys.a_r.T).max() > 1e-12
                        or np.linalg.eigvalsh(sys.a_r).min() <= 0.0):
                    spd_ok = False
    synth = synthetic_library([np.eye(RANK), 4.0 * np.eye(RANK)],
                              [np.zeros(RANK), np.ones(RANK)],
                              [(0.0, 0.0), (1.0, 1.0)])
    mid = interpolate_system(synth, (0.5, 0.5))
    geo_dev = np.abs(mid.a_r - 2.0 * np.eye(RANK)).max()
    ok = worst_reprod < 1e-10 and spd_ok and geo_dev < 1e-10
    _report("library interpolation",
            ok,
            f"reproduction {worst_reprod:.2e} (<1e-10), SPD on 10x10 grid {spd_ok}, "
            f"geometric mean |A*-2I| {geo_dev:.2e} (<1e-10)")


def test_07_end_to_end_accuracy(desk_config, libraries, test_points):
    """Scaled study analogue: mean error small and improving with snapshots."""
    mean_err = {}
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")  # test points may leave the training hull
        for n_snap, lib in libraries.items():
            errs = []
            for p in test_points:
                fom = solve_fom(desk_config.with_parameters(*p), check_balance=False)
                assert fom.report.converged
                phi, _ = rom_solve(interpolate_system(lib, p), lib.basis)
                errs.append(relative_l2_error(phi, fom.phi))
            mean_err[n_snap] = float(np.mean(errs))
    elapsed = time.perf_counter() - _SESSION_T0
    ok = (mean_err[25] <= 1e-2 and mean_err[50] <= 1e-2
          and mean_err[50] <= mean_err[25] and elapsed < 900)
    _report("end-to-end accuracy",
            ok,
            f"mean error N=25: {mean_err[25]:.2e}, N=50: {mean_err[50]:.2e} "
            f"(both <=1e-2, decreasing), suite elapsed {elapsed:.0f}s (<900s)")


def test_08_speedup_structure(libraries):
    """Zero online sweeps and a strict wall-time win at desk scale."""
    lib = libraries[25]
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = run_compare(lib, (10.25, 0.72), log=lambda *_: None)
    fom_speedup = result.fom_time_s / result.interpolated_time_s
    ok = (result.interpolated_sweeps == 0
          and result.minimally_invasive_sweeps == RANK + 1
          and result.interpolated_time_s < result.minimally_invasive_time_s
          and fom_speedup >= 10.0)
    _report("speedup structure",
            ok,
            f"online sweeps 0 vs {result.minimally_invasive_sweeps} (r+1), "
            f"online {result.interpolated_time_s * 1e3:.2f} ms < "
            f"sweep-online {result.minimally_invasive_time_s * 1e3:.2f} ms, "
            f"FOM speedup {fom_speedup:.0f}x (>=10x)")


def test_09_span_recovery(desk_config):
    """Full-rank library returns its own snapshots at training points."""
    pts = sample_parameters("lhs", 6, desk_config.seed + 2).points
    snapshots = collect_snapshots(pts, desk_config)
    lib = build_library(pts, desk_config, rank=6)
    worst = 0.0
    for i, p in enumerate(pts):
        phi, _ = rom_solve(interpolate_system(lib, p), lib.basis)
        x = snapshots.matrix[:, i]
        worst = max(worst, np.linalg.norm(phi - x) / np.linalg.norm(x))
    ok = worst <= 1e-6
    _report("span recovery", ok, f"reconstruction error {worst:.2e} (<=1e-6)")
