"""Independent reference values for the tests.

Nothing here imports from ``pathtrace``: residuals, closed-form curves, fold
locations and finite-difference Jacobians are re-derived from scratch so that
a mistake in the package cannot silently agree with itself.
"""
from __future__ import annotations

import math

import numpy as np

# ---------------------------------------------------------------------------
# analytic residuals, typed out again


def residual(name: str, u: float, lam: float) -> float:
    if name == "fa":
        return -u**2 * lam**3 - lam / 3 + 100
    if name == "fb":
        return 2000 * lam**2 - u**3 + 6 * lam**5
    if name == "fc":
        return -(u**3) * lam**2 - u + 50
    if name == "fd":
        return -500 * u**2 - 10 * lam**3 + 0.1 * u**5
    if name == "fe":
        s = lam - u - 5
        return -500 * s**2 - 10 * (u - 20) ** 3 + 0.1 * s**5
    if name == "fe_inv":
        return residual("fe", lam, u)
    if name == "cross":
        return u * u - lam * lam
    raise KeyError(name)


# ---------------------------------------------------------------------------
# closed-form curves and monotone curve parameters
#
# Each curve can be written as a graph over a single scalar. Along a trace that
# never backtracks, that scalar changes monotonically.


def _cbrt(x):
    return np.cbrt(np.asarray(x, dtype=float))


def fa_branch(lam, sign=1.0):
    """u(lam) on F_a; real for 0 < lam <= 300."""
    lam = np.asarray(lam, dtype=float)
    return sign * np.sqrt((100 - lam / 3) / lam**3)


FA_FOLD = 300.0          # u^2 = (100 - lam/3) / lam^3 >= 0


def fa_delta(lam):
    """Distance between the two F_a solutions at ``lam``."""
    return 2.0 * float(fa_branch(lam))


def fb_u(lam):
    return _cbrt(2000 * np.asarray(lam) ** 2 + 6 * np.asarray(lam) ** 5)


def fc_lam(u, sign=1.0):
    """F_c solved for lam: lam^2 = (50 - u) / u^3."""
    u = np.asarray(u, dtype=float)
    return sign * np.sqrt((50 - u) / u**3)


def fd_lam(u):
    return _cbrt(0.01 * np.asarray(u) ** 5 - 50 * np.asarray(u) ** 2)


def fe_point(s):
    """(u, lam) on F_e with s = lam - u - 5."""
    u = 20 + _cbrt(0.01 * np.asarray(s) ** 5 - 50 * np.asarray(s) ** 2)
    return u, s + u + 5


def curve_parameter(name: str, u, lam):
    """Scalar that increases strictly along a forward, non-backtracking trace."""
    u = np.asarray(u, dtype=float)
    lam = np.asarray(lam, dtype=float)
    return {
        "fa": lambda: -u,
        "fb": lambda: lam,
        "fc": lambda: lam,
        "fd": lambda: u,
        "fe": lambda: lam - u - 5,
        "fe_inv": lambda: u - lam - 5,
        "cross": lambda: lam,
    }[name]()


def backtracks(param) -> bool:
    """True when a later point maps to a parameter not beyond an earlier one."""
    p = np.asarray(param, dtype=float)
    return bool(np.any(np.diff(p) <= 0))


# ---------------------------------------------------------------------------
# Bratu: w'' + lam exp(w) = 0, w(0) = w(1) = 0.
#
# The scaled FEM problem gamma u'' + lam exp(gamma u) = 0 is this one with
# w = gamma u. Exact solutions: w(x) = -2 ln(cosh((x - 1/2) theta / 2) / cosh(theta / 4))
# where theta = sqrt(2 lam) cosh(theta / 4). The fold sits where
# d/dtheta [theta / cosh(theta / 4)] = 0, i.e. (theta / 4) tanh(theta / 4) = 1.


def _bisect(fn, lo, hi, tol=1e-15):
    flo = fn(lo)
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        fm = fn(mid)
        if (fm < 0) == (flo < 0):
            lo, flo = mid, fm
        else:
            hi = mid
        if hi - lo < tol:
            break
    return 0.5 * (lo + hi)


def bratu_fold_theta() -> float:
    return _bisect(lambda t: (t / 4) * math.tanh(t / 4) - 1.0, 1.0, 10.0)


def bratu_fold_lambda() -> float:
    t = bratu_fold_theta()
    return t * t / (2 * math.cosh(t / 4) ** 2)


def bratu_thetas(lam: float) -> list[float]:
    """Both roots of theta = sqrt(2 lam) cosh(theta/4) for 0 < lam < fold."""
    g = lambda t: t - math.sqrt(2 * lam) * math.cosh(t / 4)
    tf = bratu_fold_theta()
    out = [_bisect(g, 1e-12, tf)]
    hi = tf
    while g(hi) >= 0:
        hi *= 2
    out.append(_bisect(g, tf, hi))
    return out


def bratu_midpoints(lam: float, gamma: float) -> list[float]:
    """Midpoint values u(1/2) = w(1/2)/gamma on the lower and upper branch."""
    return [2 * math.log(math.cosh(t / 4)) / gamma for t in bratu_thetas(lam)]


# ---------------------------------------------------------------------------
# manufactured solution u = zeta lam^eta (1 - lam^eta) x (1 - x)


def manufactured_amplitude(lam, zeta=20.0, eta=50.0):
    p = np.asarray(lam, dtype=float) ** eta
    return zeta * p * (1 - p) * 0.25


def manufactured_peak(zeta=20.0, eta=50.0):
    """(lam, midpoint amplitude) of the peak: lam^eta = 1/2."""
    return 2.0 ** (-1.0 / eta), zeta / 16.0


# ---------------------------------------------------------------------------
# finite differences


def fd_jacobian(fun, x, rel=1e-6):
    """Central-difference Jacobian of ``fun: R^n -> R^m`` at ``x``."""
    x = np.asarray(x, dtype=float)
    f0 = np.atleast_1d(fun(x))
    J = np.empty((f0.size, x.size))
    for j in range(x.size):
        step = rel * max(1.0, abs(x[j]))
        xp, xm = x.copy(), x.copy()
        xp[j] += step
        xm[j] -= step
        J[:, j] = (np.atleast_1d(fun(xp)) - np.atleast_1d(fun(xm))) / (2 * step)
    return J


def rel_close(A, B, rtol=1e-5, floor=1.0) -> bool:
    """``|A - B| <= rtol * max(|B|, floor)`` in the max norm."""
    A, B = np.asarray(A, dtype=float), np.asarray(B, dtype=float)
    return float(np.max(np.abs(A - B))) <= rtol * max(float(np.max(np.abs(B))), floor)
