"""Bordered (N+1)x(N+1) solves used by the Moore-Penrose corrector.

The square matrix is the rectangular Jacobian ``A`` (N x N+1) with one extra
row appended. It is factored once with partial-pivoting LU and may then be
used for several right-hand sides.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg as sla
from scipy.linalg import lapack

from .errors import SolverError

EPS = np.finfo(float).eps
COND_LIMIT = 1.0 / (100.0 * EPS)


@dataclass
class BorderedSystem:
    A: np.ndarray
    border_row: np.ndarray
    rhs_top: np.ndarray
    rhs_bottom: float = 0.0


class BorderedLU:
    """LU factorization of ``[A; border_row]`` with a condition check."""

    def __init__(self, A, border_row):
        A = np.asarray(A, dtype=float)
        border_row = np.asarray(border_row, dtype=float).reshape(-1)
        n = A.shape[0]
        if A.ndim != 2 or A.shape[1] != n + 1 or border_row.size != n + 1:
            raise ValueError(f"bordered shapes inconsistent: A{A.shape}, border {border_row.shape}")
        M = np.vstack([A, border_row])
        if not np.all(np.isfinite(M)):
            raise SolverError("bordered matrix has non-finite entries")
        self.matrix = M
        anorm = np.linalg.norm(M, 1)
        if anorm == 0.0:
            raise SolverError("bordered matrix is zero")
        with warnings.catch_warnings():
            # exact singularity is reported through rcond below
            warnings.simplefilter("ignore", sla.LinAlgWarning)
            lu, piv = sla.lu_factor(M, check_finite=False)
        rcond, info = lapack.dgecon(lu, anorm, norm="1")
        if info != 0 or not rcond > 1.0 / COND_LIMIT:
            raise SolverError(f"bordered matrix ill-conditioned (rcond={rcond:.3e})")
        self.rcond = float(rcond)
        self._lu = (lu, piv)

    def solve(self, rhs_top, rhs_bottom=0.0) -> np.ndarray:
        rhs = np.append(np.asarray(rhs_top, dtype=float), rhs_bottom)
        y = sla.lu_solve(self._lu, rhs, check_finite=False)
        if not np.all(np.isfinite(y)):
            raise SolverError("bordered solve produced non-finite values")
        return y


def solve_bordered(sys: BorderedSystem) -> np.ndarray:
    """Solve ``[A; b^T] y = [rhs_top; rhs_bottom]``. Raises SolverError if singular."""
    return BorderedLU(sys.A, sys.border_row).solve(sys.rhs_top, sys.rhs_bottom)


def _orient(t, hint):
    if hint is not None:
        if float(np.dot(hint, t)) < 0.0:
            t = -t
    elif t[-1] < 0.0:
        t = -t
    return t


def nullspace_tangent(A, hint=None, rng=None, max_tries: int = 8) -> np.ndarray:
    """Unit vector spanning the nullspace of the N x (N+1) matrix ``A``.

    Solves ``[A; r^T] t = [0; 1]`` with ``r`` the hint when available, otherwise
    a random unit row (re-drawn if the bordered matrix is singular). The sign
    makes ``hint . t > 0``, or the lam-component non-negative without a hint.
    """
    A = np.asarray(A, dtype=float)
    n = A.shape[0]
    zeros = np.zeros(n)
    hint_arr = None if hint is None else np.asarray(hint, dtype=float).reshape(-1)
    rows = []
    if hint_arr is not None and np.linalg.norm(hint_arr) > 0:
        rows.append(hint_arr / np.linalg.norm(hint_arr))
    if rng is None:
        rng = np.random.default_rng(0)
    last_err = None
    for attempt in range(max_tries + len(rows)):
        if attempt < len(rows):
            r = rows[attempt]
        else:
            r = rng.standard_normal(n + 1)
            r /= np.linalg.norm(r)
        try:
            t = BorderedLU(A, r).solve(zeros, 1.0)
        except SolverError as err:
            last_err = err
            continue
        t /= np.linalg.norm(t)
        return _orient(t, hint_arr)
    raise SolverError(f"could not compute nullspace tangent: {last_err}")
