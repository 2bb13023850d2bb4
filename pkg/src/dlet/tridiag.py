"""Tridiagonal linear solves.

``thomas_solve`` is a plain-numpy reference implementation of the Thomas
forward/backward sweep; ``solve`` wraps the LAPACK banded solver, which
is the production path (identical arithmetic on these systems, supports
matrix right-hand sides). The two are cross-checked in the test suite.
"""

import numpy as np
from scipy.linalg import solve_banded


def thomas_solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system by the Thomas algorithm.

    Args:
        lower: sub-diagonal, length n-1.
        diag: diagonal, length n.
        upper: super-diagonal, length n-1.
        rhs: right-hand side, shape (n,) or (n, m).

    Returns:
        Solution array of the same shape as rhs.
    """
    n = diag.size
    c = np.zeros(n - 1)
    x = np.array(rhs, dtype=float, copy=True)
    denom = diag[0]
    c[0] = upper[0] / denom
    x[0] = x[0] / denom
    for i in range(1, n):
        denom = diag[i] - lower[i - 1] * c[i - 1]
        if i < n - 1:
            c[i] = upper[i] / denom
        x[i] = (x[i] - lower[i - 1] * x[i - 1]) / denom
    for i in range(n - 2, -1, -1):
        x[i] -= c[i] * x[i + 1]
    return x


def solve(lower, diag, upper, rhs):
    """Solve a tridiagonal system with the banded LAPACK routine.

    Accepts rhs of shape (n,) or (n, m); the banded layout rolls the
    off-diagonals into LAPACK's ab format.
    """
    n = diag.size
    ab = np.zeros((3, n))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return solve_banded((1, 1), ab, rhs, overwrite_ab=False, overwrite_b=False)
