"""Shifted deflation and periodic branch scanning at fixed lam.

Known roots ``u*_j`` are removed from Newton's reach by multiplying the
residual by ``m(u) = prod_j (|u - u*_j|^-p + sigma)``. Roots of ``f`` away from
the known set are preserved.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DeflationError, EvaluationError
from .stepper import newton_fixed_lambda
from .trace import CurvePoint

INCREASING = "increasing"
DECREASING = "decreasing"
UNKNOWN = "unknown"


@dataclass(frozen=True)
class DeflationParams:
    power: float = 2.0
    shift: float = 1.0
    period: int = 5
    max_extra: int = 4
    distinct_rtol: float = 1e-5
    perturbation: float = 1e-2

    def violations(self) -> list[str]:
        out = []
        if not self.power > 0:
            out.append("deflation power must be > 0")
        if not self.shift >= 0:
            out.append("deflation shift must be >= 0")
        if self.period < 1:
            out.append("deflation period must be >= 1")
        if self.max_extra < 0:
            out.append("max_extra must be >= 0")
        return out

    def distinct_radius(self, u) -> float:
        return self.distinct_rtol * (1.0 + float(np.linalg.norm(u)))


@dataclass(frozen=True)
class NewtonControl:
    tol: float = 1e-7
    max_iters: int = 30
    max_halvings: int = 8
    max_stuck: int = 2
    window: int = 4


@dataclass
class BranchScan:
    lam: float
    solutions: list = field(default_factory=list)
    delta: float | None = None
    trend: str = UNKNOWN

    @property
    def n_branches(self) -> int:
        return len(self.solutions)

    def closest_other(self):
        """The non-current solution nearest the current one, or None."""
        if len(self.solutions) < 2:
            return None
        u0 = self.solutions[0]
        dists = [np.linalg.norm(s - u0) for s in self.solutions[1:]]
        return self.solutions[1 + int(np.argmin(dists))]


def deflation_factor(u, found, params: DeflationParams, gradient: bool = True):
    """``m(u)`` and its gradient (None when ``gradient`` is False).

    With ``fac_j = |u - r_j|^-p + shift`` the gradient is
    ``m * sum_j dfac_j / fac_j``.
    """
    u = np.asarray(u, dtype=float)
    if len(found) == 0:
        return 1.0, (np.zeros_like(u) if gradient else None)
    roots = found if isinstance(found, np.ndarray) else np.asarray(found, dtype=float)
    D = u - roots.reshape(len(roots), -1)
    nd = np.sqrt((D * D).sum(axis=1))
    if nd.min() <= 1e-14:
        raise DeflationError("evaluation point coincides with a deflated root")
    p = params.power
    inv = nd ** (-p)
    fac = inv + params.shift
    m = float(fac.prod())
    if not gradient:
        return m, None
    # dfac_j = -p |d_j|^(-p-2) d_j
    weights = -p * inv / (nd * nd) / fac
    return m, m * (weights @ D)


def deflated_residual(f_val, J_val, u, found, params: DeflationParams):
    """Deflated residual ``m f`` and its Jacobian ``m J + f grad(m)^T``."""
    f_val = np.asarray(f_val, dtype=float)
    J_val = np.asarray(J_val, dtype=float)
    if len(found) == 0:
        return f_val, J_val
    m, grad = deflation_factor(u, found, params)
    return m * f_val, m * J_val + np.outer(f_val, grad)


def _deflated_value(problem, lam, u, found, params):
    """``(|m f|, f)`` at ``u``; ``(inf, None)`` where either is undefined."""
    try:
        f = problem.residual(u, lam)
        m, _ = deflation_factor(u, found, params, gradient=False)
    except (EvaluationError, DeflationError):
        return np.inf, None
    with np.errstate(over="ignore", invalid="ignore"):
        val = m * math.sqrt(float(f @ f))
    if not math.isfinite(val):
        return np.inf, None
    return val, f


def _deflated_newton(problem, lam, u0, found, params, ctl: NewtonControl):
    # Newton on the deflated residual with step halving on |m f|; convergence
    # is judged on the undeflated residual. A start whose step cannot reduce
    # |m f| at any halving for several iterations in a row is abandoned rather
    # than iterated to max_iters.
    u = np.array(u0, dtype=float)
    n = u.size
    found = np.asarray(found, dtype=float).reshape(len(found), n)
    try:
        f = problem.residual(u, lam)
    except EvaluationError:
        return None
    stuck = 0
    history = []
    for _ in range(ctl.max_iters + 1):
        if f is None:
            return None
        with np.errstate(over="ignore", invalid="ignore"):
            fn = math.sqrt(float(f @ f))
        if not math.isfinite(fn):
            return None
        if fn <= ctl.tol:
            return u
        try:
            J = problem.jacobian(u, lam)[:, :n]
            g, G = deflated_residual(f, J, u, found, params)
            step = np.linalg.solve(G, g)
        except (EvaluationError, DeflationError, np.linalg.LinAlgError):
            return None
        with np.errstate(over="ignore", invalid="ignore"):
            g0 = math.sqrt(float(g @ g))
        if not (math.isfinite(g0) and np.isfinite(step).all()):
            return None
        history.append(g0)
        if ctl.window and len(history) > ctl.window and g0 > 0.5 * history[-1 - ctl.window]:
            return None
        alpha = 1.0
        for _ in range(ctl.max_halvings):
            val, f_new = _deflated_value(problem, lam, u - alpha * step, found, params)
            if val < g0:
                break
            alpha *= 0.5
        else:
            stuck += 1
            if stuck >= ctl.max_stuck:
                return None
            u = u - alpha * step
            try:
                f = problem.residual(u, lam)
            except EvaluationError:
                return None
            continue
        stuck = 0
        u = u - alpha * step
        f = f_new
    return None


def _is_new(u, found, params) -> bool:
    return all(np.linalg.norm(u - r) > params.distinct_radius(r) for r in found)


def _starts(guess, found, params, directions):
    # the plain guess first (unless it sits on a known root, where deflation is
    # singular), then offsets along +-d for each direction
    on_root = any(np.linalg.norm(guess - r) <= params.distinct_radius(r) for r in found)
    out = [] if on_root else [guess]
    scale = params.perturbation * (1.0 + float(np.linalg.norm(guess)))
    for d in directions:
        out.append(guess + scale * d)
        out.append(guess - scale * d)
    return out


def find_distinct_solutions(problem, lam: float, guesses, params: DeflationParams,
                            newton_ctl: NewtonControl = NewtonControl(), directions=None) -> list:
    """Distinct roots of ``F(., lam)`` reached by deflated Newton from ``guesses``.

    Guesses are cycled in order; every new root deflates the residual and the
    cycle restarts. The search stops when a full pass finds nothing or when
    ``1 + max_extra`` roots are known. When Newton fails from a guess, or the
    guess coincides with a known root, it is retried from offsets along each of
    ``directions``.
    """
    guesses = [np.array(g, dtype=float).reshape(-1) for g in guesses]
    if not guesses:
        raise ValueError("at least one initial guess is required")
    n = guesses[0].size
    if directions is None:
        directions = [np.ones(n) / np.sqrt(n)]
    directions = [np.asarray(d, dtype=float) / np.linalg.norm(d) for d in directions
                  if np.linalg.norm(d) > 0]
    found: list[np.ndarray] = []
    cap = 1 + params.max_extra
    progress = True
    while progress and len(found) < cap:
        progress = False
        for g in guesses:
            for start in _starts(g, found, params, directions):
                root = _deflated_newton(problem, lam, start, found, params, newton_ctl)
                if root is not None and _is_new(root, found, params):
                    found.append(root)
                    progress = True
                    break
            if progress:
                break
    return found


def trend_of(delta, prev: BranchScan | None) -> str:
    if prev is None or prev.delta is None or delta is None:
        return UNKNOWN
    if delta < prev.delta:
        return DECREASING
    if delta > prev.delta:
        return INCREASING
    return UNKNOWN


def scan_branches(problem, at: CurvePoint, prev: BranchScan | None, params: DeflationParams,
                  newton_ctl: NewtonControl = NewtonControl()) -> BranchScan:
    """Look for other solutions at ``at.lam`` and measure the closest one.

    Guesses are the current solution followed by every solution of the
    previous scan. The first returned solution is the current branch.
    """
    guesses = [at.u]
    if prev is not None:
        guesses += list(prev.solutions)
    n = at.u.size
    directions = []
    vu = np.asarray(at.v[:-1], dtype=float)
    if np.linalg.norm(vu) > 1e-12:
        directions.append(vu)
    if n > 1:
        directions.append(at.u if np.linalg.norm(at.u) > 0 else np.ones(n))
    directions.append(np.ones(n))
    sols = find_distinct_solutions(problem, at.lam, guesses, params, newton_ctl, directions)
    if not sols or np.linalg.norm(sols[0] - at.u) > params.distinct_radius(at.u) + 10 * newton_ctl.tol:
        return BranchScan(at.lam, [], None, UNKNOWN)
    delta = None
    if len(sols) > 1:
        delta = min(float(np.linalg.norm(s - sols[0])) for s in sols[1:])
    return BranchScan(at.lam, sols, delta, trend_of(delta, prev))
