"""Bilinear discontinuous Galerkin stencil on rectangles.

Local basis: tensor products of the 1-D linear functions l0(t) = 1-t and
l1(t) = t on the reference square, ordered k = ix + 2*iy, i.e.
k = 0: (0,0), 1: (1,0), 2: (0,1), 3: (1,1). With full upwind flux the
transport equation decouples into one invertible 4x4 solve per cell per
direction; inflow enters through face-coupling matrices against the
upwind neighbor's outgoing trace.
"""

from __future__ import annotations

import numpy as np

N_LOCAL = 4

# 1-D building blocks on [0, 1]:
#   _M1[a,b] = int l_a l_b          (mass)
#   _D1[a,b] = int l_a l_b'         (derivative against test function)
#   _E0/_E1  = traces at t=0 / t=1
#   _CUP[a,b] = l_a(0) * l_b(1)     (own inflow trace x upwind outgoing trace)
_M1 = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
_D1 = np.array([[-0.5, 0.5], [-0.5, 0.5]])
_E0 = np.array([[1.0, 0.0], [0.0, 0.0]])
_E1 = np.array([[0.0, 0.0], [0.0, 1.0]])
_CUP = np.array([[0.0, 1.0], [0.0, 0.0]])
_CDN = np.array([[0.0, 0.0], [1.0, 0.0]])


def local_mass_matrix(dx: float, dy: float) -> np.ndarray:
    """4x4 mass matrix of a dx-by-dy cell."""
    return dx * dy * np.kron(_M1, _M1)


def _upwind_1d(c: float) -> np.ndarray:
    # volume streaming (integrated by parts) plus the outflow face term
    out = c * _E1 if c > 0 else -c * _E0
    return -c * _D1.T + out


def local_cell_matrix(mu, eta, sigma_t, dx, dy) -> np.ndarray:
    """Left-hand 4x4 system of one cell for direction (mu, eta).

    Invertible for sigma_t >= 0 whenever mu != 0 and eta != 0: the upwind
    streaming part is positive definite on the local space.
    """
    a = sigma_t * dx * dy * np.kron(_M1, _M1)
    a += dy * np.kron(_M1, _upwind_1d(mu))
    a += dx * np.kron(_upwind_1d(eta), _M1)
    return a


def coupling_x(mu, dy) -> np.ndarray:
    """Inflow contribution from the x-upwind neighbor (RHS side)."""
    cpl = mu * _CUP if mu > 0 else -mu * _CDN
    return dy * np.kron(_M1, cpl)


def coupling_y(eta, dx) -> np.ndarray:
    """Inflow contribution from the y-upwind neighbor (RHS side)."""
    cpl = eta * _CUP if eta > 0 else -eta * _CDN
    return dx * np.kron(cpl, _M1)
