"""Standard Moore-Penrose predictor-corrector continuation.

One continuation step predicts along the current unit tangent and corrects
with the Moore-Penrose iteration, which updates the point and the tangent
together through two bordered solves per iteration::

    [A(X); V^T] d = [F(X); 0]         X <- X - d
    [A(X); V^T] T = [A(X) V; 0]       V <- (V - T) / |V - T|

The step length adapts to the corrector iteration count.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .bordered import BorderedLU, nullspace_tangent
from .errors import ConfigError, EvaluationError, SolverError
from .trace import CurvePoint, Trace

CONVERGED = "converged"
MAX_ITERS = "max_iters"
SOLVER_FAILURE = "solver_failure"


@dataclass(frozen=True)
class StepControl:
    h: float = 0.1
    h_min: float = 1e-4
    h_max: float = math.inf
    h_inc: float = 1.5
    h_dec: float = 0.5
    K_min: int = 5
    K_max: int = 10
    k_max: int = 20
    eps_F: float = 1e-7
    eps_x: float = 1e-7

    def violations(self) -> list[str]:
        out = []
        if not (0 < self.h_min <= self.h):
            out.append(f"need 0 < h_min <= h (h_min={self.h_min}, h={self.h})")
        if not self.h_max >= self.h:
            out.append(f"need h_max >= h (h_max={self.h_max}, h={self.h})")
        if not (0 < self.h_dec < 1 < self.h_inc):
            out.append(f"need 0 < h_dec < 1 < h_inc (h_dec={self.h_dec}, h_inc={self.h_inc})")
        if not (self.K_min < self.K_max < self.k_max):
            out.append(f"need K_min < K_max < k_max (got {self.K_min}, {self.K_max}, {self.k_max})")
        if not (self.eps_F > 0 and self.eps_x > 0):
            out.append("tolerances eps_F and eps_x must be positive")
        return out

    def validate(self) -> "StepControl":
        bad = self.violations()
        if bad:
            raise ConfigError(bad)
        return self


@dataclass
class StepOutcome:
    status: str
    x: np.ndarray | None = None
    v: np.ndarray | None = None
    iterations: int = 0
    message: str = ""

    @property
    def converged(self) -> bool:
        return self.status == CONVERGED

    def point(self, h=0.0) -> CurvePoint:
        return CurvePoint.from_x(self.x, self.v, h=h, iters=self.iterations)


@dataclass(frozen=True)
class StopRule:
    max_points: int = 10_000
    lambda_min: float = -math.inf
    lambda_max: float = math.inf
    max_attempts: int = 200_000

    def violations(self) -> list[str]:
        out = []
        if self.max_points < 1:
            out.append("max_points must be >= 1")
        if not self.lambda_min < self.lambda_max:
            out.append("need lambda_min < lambda_max")
        return out

    def reached(self, trace: Trace) -> str | None:
        if len(trace) >= self.max_points:
            return "max points reached"
        lam = trace.points[-1].lam
        if lam < self.lambda_min or lam > self.lambda_max:
            return "lambda left window"
        return None


def predict(x: np.ndarray, v: np.ndarray, h: float) -> np.ndarray:
    return np.asarray(x, dtype=float) + h * np.asarray(v, dtype=float)


def _refresh_tangent(problem, x, v):
    # nullspace direction of A at the accepted point, oriented like v
    A = problem.jacobian_x(x)
    lu = BorderedLU(A, v)
    t = lu.solve(A @ v, 0.0)
    z = v - t
    return z / np.linalg.norm(z)


def mp_correct(problem, X0, V0, ctl: StepControl) -> StepOutcome:
    """Moore-Penrose corrector from prediction ``X0`` with tangent guess ``V0``.

    Convergence requires ``|F(X^k)| <= eps_F`` and ``|X^{k+1} - X^k| <= eps_x``,
    with F taken at the pre-update iterate. The accepted point is additionally
    required to satisfy ``|F| <= eps_F`` itself; if it does not, iteration
    continues. Solver and evaluation errors are reported in the status.
    """
    X = np.array(X0, dtype=float)
    V = np.array(V0, dtype=float)
    V /= np.linalg.norm(V)
    k = 0
    try:
        F = problem.residual_x(X)
        for k in range(ctl.k_max):
            if not np.all(np.isfinite(F)):
                return StepOutcome(SOLVER_FAILURE, iterations=k, message="non-finite residual")
            A = problem.jacobian_x(X)
            lu = BorderedLU(A, V)
            delta = lu.solve(F, 0.0)
            T = lu.solve(A @ V, 0.0)
            X_new = X - delta
            Z = V - T
            V_new = Z / np.linalg.norm(Z)
            F_new = problem.residual_x(X_new)
            if (np.linalg.norm(F) <= ctl.eps_F and np.linalg.norm(X_new - X) <= ctl.eps_x
                    and np.linalg.norm(F_new) <= ctl.eps_F):
                V_new = _refresh_tangent(problem, X_new, V_new)
                return StepOutcome(CONVERGED, X_new, V_new, k + 1)
            X, V, F = X_new, V_new, F_new
    except (SolverError, EvaluationError, FloatingPointError, OverflowError) as err:
        return StepOutcome(SOLVER_FAILURE, iterations=k + 1, message=str(err))
    return StepOutcome(MAX_ITERS, iterations=ctl.k_max, message="k_max reached")


def next_h(ctl: StepControl, h: float, iterations: int, succeeded: bool) -> float:
    if not succeeded or iterations > ctl.K_max:
        return max(h * ctl.h_dec, ctl.h_min)
    if iterations < ctl.K_min:
        return min(h * ctl.h_inc, ctl.h_max)
    return h


def adapt_h(ctl: StepControl, iterations: int, succeeded: bool) -> StepControl:
    """Return ``ctl`` with its step length adjusted after a corrector run."""
    return replace(ctl, h=next_h(ctl, ctl.h, iterations, succeeded))


@dataclass
class NewtonResult:
    u: np.ndarray
    converged: bool
    iterations: int
    message: str = ""

    def __bool__(self):
        return self.converged


def newton_fixed_lambda(problem, u0, lam: float, tol: float = 1e-7,
                        max_iters: int = 30) -> NewtonResult:
    """Plain Newton on ``F(., lam) = 0`` with ``lam`` frozen."""
    u = np.array(u0, dtype=float).reshape(-1)
    n = u.size
    for it in range(max_iters + 1):
        try:
            f = problem.residual(u, lam)
        except EvaluationError as err:
            return NewtonResult(u, False, it, str(err))
        if not np.all(np.isfinite(f)):
            return NewtonResult(u, False, it, "non-finite residual")
        if np.linalg.norm(f) <= tol:
            return NewtonResult(u, True, it)
        if it == max_iters:
            break
        try:
            J = problem.jacobian(u, lam)[:, :n]
            step = np.linalg.solve(J, f)
        except (EvaluationError, np.linalg.LinAlgError) as err:
            return NewtonResult(u, False, it, str(err))
        if not np.all(np.isfinite(step)):
            return NewtonResult(u, False, it, "non-finite Newton step")
        u = u - step
    return NewtonResult(u, False, max_iters, "max_iters reached")


def start_point(problem, u0, lam0: float, ctl: StepControl, direction: float = 1.0,
                rng=None) -> CurvePoint:
    """Converge onto the curve at ``lam0`` and attach an oriented unit tangent.

    ``direction`` gives the sign of the tangent's lam-component.
    """
    res = newton_fixed_lambda(problem, u0, lam0, tol=ctl.eps_F, max_iters=50)
    if not res.converged:
        raise EvaluationError(f"no starting solution at lam={lam0}: {res.message}")
    x = np.append(res.u, lam0)
    v = nullspace_tangent(problem.jacobian_x(x), rng=rng)
    if direction < 0:
        v = -v
    return CurvePoint.from_x(x, v)


def step_from(problem, pt: CurvePoint, v: np.ndarray, h: float, ctl: StepControl) -> StepOutcome:
    """Predict from ``pt`` along ``v`` by ``h`` and correct."""
    return mp_correct(problem, predict(pt.x, v, h), v, ctl)


def trace_standard(problem, start: CurvePoint, ctl: StepControl, stop: StopRule) -> Trace:
    """Plain Moore-Penrose continuation without any safeguards.

    Terminates on a stop rule, or when a step fails at ``h_min`` (retrying
    from the same point with the same step would fail identically).
    """
    ctl.validate()
    trace = Trace(problem.label)
    trace.add_point(start)
    pt, h = start, ctl.h
    attempts = 0
    while True:
        reason = stop.reached(trace)
        if reason:
            trace.finish(reason, completed=True)
            return trace
        if attempts >= stop.max_attempts:
            trace.finish("max attempts reached", completed=True)
            return trace
        attempts += 1
        out = step_from(problem, pt, pt.v, h, ctl)
        if out.converged:
            pt = out.point(h)
            trace.add_point(pt)
            h = next_h(ctl, h, out.iterations, True)
            continue
        trace.log("corrector_failed", h=h, status=out.status, iters=out.iterations)
        if h <= ctl.h_min:
            trace.log("h_exhausted", h=h, lam=pt.lam)
            trace.finish("h exhausted at h_min", completed=False)
            return trace
        h = next_h(ctl, h, out.iterations, False)
