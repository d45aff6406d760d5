"""Full-order solves: GMRES over the sweep operator plus the conservation
check used to validate converged solutions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .gmres import GmresReport, gmres_solve
from .operators import TransportOperator, particle_balance
from .problem import ProblemConfig


class FomConvergenceError(RuntimeError):
    """A full-order solve failed to reach the requested tolerance."""

    def __init__(self, message, theta1=None, theta2=None):
        super().__init__(message)
        self.theta1 = theta1
        self.theta2 = theta2


@dataclass(frozen=True)
class FomResult:
    phi: np.ndarray  # flat moment field
    report: GmresReport
    balance_residual: float
    outflow: np.ndarray  # per-group boundary leakage


def solve_fom(config: ProblemConfig, operator: TransportOperator | None = None,
              check_balance: bool = True) -> FomResult:
    """Solve the transport problem described by ``config``.

    Passing a prebuilt ``operator`` skips mesh/quadrature setup (it must
    match the config). The balance residual comes from one extra
    consistency sweep after convergence; disable it when only the flux is
    needed.
    """
    op = operator if operator is not None else TransportOperator.from_config(config)
    b = op.rhs()
    phi, report = gmres_solve(
        op.apply, b,
        tol=config.gmres_tol, restart=config.gmres_restart, maxiter=config.gmres_maxiter,
    )
    if check_balance:
        phi_consistent, outflow = op.sweep_with_outflow(phi)
        balance = particle_balance(phi_consistent, outflow, op.mesh, op.xs)
    else:
        balance = float("nan")
        outflow = np.full(op.n_groups, np.nan)
    return FomResult(phi=phi, report=report, balance_residual=balance, outflow=outflow)
