"""Restarted GMRES over an abstract operator action.

Modified Gram-Schmidt Arnoldi with Givens-rotation least squares; one
reorthogonalization pass is taken whenever the post-orthogonalization
overlap with the Krylov basis exceeds 1e-10 relative. The initial guess is
always zero so that solutions are reproducible functions of the problem
alone.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_REORTH_TOL = 1e-10


@dataclass(frozen=True)
class GmresReport:
    """Outcome of one solve.

    ``sweep_count`` is the number of operator applications: one per Arnoldi
    step plus one true-residual evaluation per restart cycle after the
    first. ``residual_history`` holds the per-iteration least-squares
    residual estimates, non-increasing within each restart cycle.
    """

    iterations: int
    final_relative_residual: float
    converged: bool
    sweep_count: int
    residual_history: tuple = ()


def gmres_solve(op, b, tol=1e-8, restart=30, maxiter=1000):
    """Solve op(x) = b with restarted GMRES and a zero initial guess.

    Parameters
    ----------
    op : callable
        Linear operator action on flat vectors.
    b : ndarray
        Right-hand side.
    tol : float
        Relative residual target ||b - op(x)|| / ||b||.
    restart : int
        Arnoldi cycle length.
    maxiter : int
        Total Arnoldi iteration budget across cycles.

    Returns
    -------
    (x, GmresReport)
        Non-convergence is reported through the flag, not an exception;
        a NaN or Inf coming out of the operator is a hard error.
    """
    if tol <= 0:
        raise ValueError(f"tol must be > 0, got {tol}")
    b = np.asarray(b, dtype=np.float64).ravel()
    n = b.size
    x = np.zeros(n)
    bnorm = float(np.linalg.norm(b))
    if bnorm == 0.0:
        return x, GmresReport(0, 0.0, True, 0)

    ops = 0
    total_iters = 0
    history = []
    rel_res = np.inf

    while True:
        if total_iters == 0:
            r = b.copy()  # zero initial guess: no operator application needed
        else:
            r = b - _checked(op, x)
            ops += 1
        rnorm = float(np.linalg.norm(r))
        rel_res = rnorm / bnorm
        if rel_res <= tol:
            return x, GmresReport(total_iters, rel_res, True, ops, tuple(history))
        if total_iters >= maxiter:
            return x, GmresReport(total_iters, rel_res, False, ops, tuple(history))

        m = min(restart, maxiter - total_iters)
        V = np.empty((m + 1, n))
        H = np.zeros((m + 1, m))
        cs = np.empty(m)
        sn = np.empty(m)
        g = np.zeros(m + 1)
        V[0] = r / rnorm
        g[0] = rnorm

        j = 0
        for j in range(m):
            w = _checked(op, V[j])
            ops += 1
            total_iters += 1
            # modified Gram-Schmidt against the current basis
            for i in range(j + 1):
                hij = float(V[i] @ w)
                H[i, j] = hij
                w -= hij * V[i]
            wnorm = float(np.linalg.norm(w))
            overlap = np.abs(V[: j + 1] @ w)
            if wnorm > 0.0 and overlap.max() > _REORTH_TOL * wnorm:
                for i in range(j + 1):
                    corr = float(V[i] @ w)
                    H[i, j] += corr
                    w -= corr * V[i]
                wnorm = float(np.linalg.norm(w))
            H[j + 1, j] = wnorm

            # apply accumulated Givens rotations, then annihilate H[j+1, j]
            for i in range(j):
                t = cs[i] * H[i, j] + sn[i] * H[i + 1, j]
                H[i + 1, j] = -sn[i] * H[i, j] + cs[i] * H[i + 1, j]
                H[i, j] = t
            denom = float(np.hypot(H[j, j], H[j + 1, j]))
            if denom == 0.0:
                cs[j], sn[j] = 1.0, 0.0
            else:
                cs[j] = H[j, j] / denom
                sn[j] = H[j + 1, j] / denom
            H[j, j] = denom
            H[j + 1, j] = 0.0
            g[j + 1] = -sn[j] * g[j]
            g[j] = cs[j] * g[j]

            est = abs(g[j + 1]) / bnorm
            history.append(est)
            if est <= tol or wnorm == 0.0:
                break
            V[j + 1] = w / wnorm

        k = j + 1
        y = np.linalg.solve(H[:k, :k], g[:k]) if k else np.zeros(0)
        x = x + V[:k].T @ y
        # loop back: the cycle start recomputes the true residual and
        # either confirms convergence or continues


def _checked(op, v):
    # always copy: the result is mutated during orthogonalization and the
    # operator may hand back its own input (e.g. the identity)
    out = np.array(op(v), dtype=np.float64, copy=True).ravel()
    if not np.all(np.isfinite(out)):
        raise FloatingPointError(
            "operator returned a non-finite value; the underlying sweep is broken"
        )
    return out
