"""Parameterized problems F(u, lam) = 0 and the analytic test functions.

A problem maps ``u`` (length ``dim_u``) and a scalar parameter ``lam`` to a
residual of length ``dim_u``. Its Jacobian is the rectangular matrix
``[dF/du | dF/dlam]`` of shape ``(dim_u, dim_u + 1)``.
"""
from __future__ import annotations

import math
from typing import Callable

import numpy as np

from .errors import ConfigError, EvaluationError

SQRT_EPS = math.sqrt(np.finfo(float).eps)


class Problem:
    """Base class. Subclasses implement ``residual`` and usually ``jacobian``.

    The default ``jacobian`` falls back to central finite differences so that
    user-registered problems only need a residual.
    """

    dim_u: int = 1
    label: str = "problem"

    def residual(self, u: np.ndarray, lam: float) -> np.ndarray:
        raise NotImplementedError

    def jacobian(self, u: np.ndarray, lam: float) -> np.ndarray:
        x = np.append(np.asarray(u, dtype=float), lam)
        return jacobian_fd(self, x)

    def residual_x(self, x: np.ndarray) -> np.ndarray:
        return self.residual(x[:-1], float(x[-1]))

    def jacobian_x(self, x: np.ndarray) -> np.ndarray:
        return self.jacobian(x[:-1], float(x[-1]))

    def diagnostic(self, u: np.ndarray) -> float:
        """Scalar used to plot/report a solution (the unknown itself in 1-D)."""
        return float(u[0])

    def __repr__(self):
        return f"<{type(self).__name__} {self.label!r} N={self.dim_u}>"


class FunctionProblem(Problem):
    """Problem built from plain callables; Jacobian optional."""

    def __init__(self, residual: Callable, dim_u: int, jacobian: Callable | None = None,
                 label: str = "user"):
        self._residual = residual
        self._jacobian = jacobian
        self.dim_u = int(dim_u)
        self.label = label

    def residual(self, u, lam):
        return np.atleast_1d(np.asarray(self._residual(np.asarray(u, dtype=float), lam),
                                        dtype=float))

    def jacobian(self, u, lam):
        if self._jacobian is None:
            return super().jacobian(u, lam)
        return np.asarray(self._jacobian(np.asarray(u, dtype=float), lam), dtype=float)


def jacobian_fd(problem: Problem, x: np.ndarray, rel_step: float = SQRT_EPS) -> np.ndarray:
    """Central-difference approximation of ``[F_u | F_lam]`` at ``x = (u, lam)``.

    The step for coordinate j is ``rel_step * (1 + |x_j|)``.
    """
    if not rel_step > 0:
        raise ValueError("rel_step must be positive")
    x = np.asarray(x, dtype=float)
    n = x.size - 1
    jac = np.empty((n, n + 1))
    for j in range(n + 1):
        step = rel_step * (1.0 + abs(x[j]))
        xp = x.copy()
        xm = x.copy()
        xp[j] += step
        xm[j] -= step
        fp = problem.residual_x(xp)
        fm = problem.residual_x(xm)
        if not (np.all(np.isfinite(fp)) and np.all(np.isfinite(fm))):
            raise EvaluationError(f"non-finite residual perturbing coordinate {j}", coordinate=j)
        jac[:, j] = (fp - fm) / (2.0 * step)
    return jac


# ---------------------------------------------------------------------------
# Analytic scalar test functions. Each entry: (F, dF/du, dF/dlam).

def _fa(u, lam):
    return -u * u * lam**3 - lam / 3.0 + 100.0


def _fa_du(u, lam):
    return -2.0 * u * lam**3


def _fa_dl(u, lam):
    return -3.0 * u * u * lam * lam - 1.0 / 3.0


def _fb(u, lam):
    return 2000.0 * lam * lam - u**3 + 6.0 * lam**5


def _fb_du(u, lam):
    return -3.0 * u * u


def _fb_dl(u, lam):
    return 4000.0 * lam + 30.0 * lam**4


def _fc(u, lam):
    return -u**3 * lam * lam - u + 50.0


def _fc_du(u, lam):
    return -3.0 * u * u * lam * lam - 1.0


def _fc_dl(u, lam):
    return -2.0 * u**3 * lam


def _fd(u, lam):
    return -500.0 * u * u - 10.0 * lam**3 + u**5 / 10.0


def _fd_du(u, lam):
    return -1000.0 * u + 0.5 * u**4


def _fd_dl(u, lam):
    return -30.0 * lam * lam


def _fe(u, lam):
    s = lam - u - 5.0
    return -500.0 * s * s - 10.0 * (u - 20.0) ** 3 + 0.1 * s**5


def _fe_ds(s):
    # derivative of the s-dependent part w.r.t. s = lam - u - 5
    return -1000.0 * s + 0.5 * s**4


def _fe_du(u, lam):
    s = lam - u - 5.0
    return -_fe_ds(s) - 30.0 * (u - 20.0) ** 2


def _fe_dl(u, lam):
    return _fe_ds(lam - u - 5.0)


# The inverted curve swaps the plotted axes: u plays F_e's parameter and lam
# plays F_e's unknown.
def _fe_inv(u, lam):
    return _fe(lam, u)


def _fe_inv_du(u, lam):
    return _fe_dl(lam, u)


def _fe_inv_dl(u, lam):
    return _fe_du(lam, u)


# Two straight branches u = lam and u = -lam crossing at the origin; used to
# exercise the bifurcation escape of the horizontal turning-point method.
def _cross(u, lam):
    return (u - lam) * (u + lam)


def _cross_du(u, lam):
    return 2.0 * u


def _cross_dl(u, lam):
    return -2.0 * lam


ANALYTIC = {
    "fa": (_fa, _fa_du, _fa_dl),
    "fb": (_fb, _fb_du, _fb_dl),
    "fc": (_fc, _fc_du, _fc_dl),
    "fd": (_fd, _fd_du, _fd_dl),
    "fe": (_fe, _fe_du, _fe_dl),
    "fe_inv": (_fe_inv, _fe_inv_du, _fe_inv_dl),
    "cross": (_cross, _cross_du, _cross_dl),
}

DESCRIPTIONS = {
    "fa": "-u^2 lam^3 - lam/3 + 100 (severe horizontal limit point at lam=300)",
    "fb": "2000 lam^2 - u^3 + 6 lam^5 (vertical cusp at the origin)",
    "fc": "-u^3 lam^2 - u + 50 (severe vertical limit point at u=50)",
    "fd": "-500 u^2 - 10 lam^3 + u^5/10 (horizontal cusp at the origin)",
    "fe": "-500 s^2 - 10 (u-20)^3 + 0.1 s^5, s = lam-u-5 (cusp at an angle)",
    "fe_inv": "fe with the roles of u and lam exchanged",
    "cross": "(u - lam)(u + lam) (two lines crossing at the origin, a bifurcation)",
}


def _canonical(name: str) -> str:
    key = str(name).strip().lower()
    if key not in ANALYTIC:
        raise ConfigError(f"unknown analytic problem {name!r}; expected one of "
                          f"{', '.join(sorted(ANALYTIC))}")
    return key


def eval_analytic(name: str, u: float, lam: float) -> float:
    """Residual of analytic test function ``name`` at ``(u, lam)``."""
    f, _, _ = ANALYTIC[_canonical(name)]
    return float(f(float(u), float(lam)))


class AnalyticProblem(Problem):
    """One of the scalar test functions, with its hand-derived Jacobian."""

    dim_u = 1

    def __init__(self, name: str):
        self.name = _canonical(name)
        self.label = self.name
        self._f, self._du, self._dl = ANALYTIC[self.name]

    def residual(self, u, lam):
        u0 = float(np.asarray(u).reshape(-1)[0])
        try:
            val = self._f(u0, float(lam))
        except OverflowError:
            val = math.inf
        if not math.isfinite(val):
            raise EvaluationError(f"{self.name}: non-finite residual at u={u0!r}, lam={lam!r}")
        return np.array([val])

    def jacobian(self, u, lam):
        u0 = float(np.asarray(u).reshape(-1)[0])
        lam = float(lam)
        try:
            jac = np.array([[self._du(u0, lam), self._dl(u0, lam)]])
        except OverflowError:
            jac = np.array([[math.inf, math.inf]])
        if not np.all(np.isfinite(jac)):
            raise EvaluationError(f"{self.name}: non-finite Jacobian at u={u0!r}, lam={lam!r}")
        return jac


def make_problem(name: str, **params) -> Problem:
    """Build a registered problem by id (analytic ids or ``bratu``/``manufactured``)."""
    key = str(name).strip().lower()
    if key in ANALYTIC:
        if params:
            raise ConfigError(f"problem {key!r} takes no parameters, got {sorted(params)}")
        return AnalyticProblem(key)
    if key in ("bratu", "manufactured"):
        from . import fem1d

        return fem1d.make_fem_problem(key, **params)
    raise ConfigError(f"unknown problem id {name!r}")


def problem_ids() -> list[str]:
    return list(ANALYTIC) + ["bratu", "manufactured"]
