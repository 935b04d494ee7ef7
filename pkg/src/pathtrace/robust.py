"""Safeguarded continuation driver with turning-point procedures.

The improved driver wraps the Moore-Penrose step with

* periodic deflation scans that measure the distance ``delta`` to the
  nearest other solution at the current ``lam``,
* step safeguards on ``|du|``, ``|dlam|``, the sign of ``v_lam`` and the
  cosine between consecutive tangents,
* a vertical turning-point jump (fixed-``lam`` Newton plus a tilted secant
  tangent) when the step length is exhausted, and
* a horizontal turning-point procedure that advances the current branch and
  the nearby secondary branch towards each other and splices them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .bordered import nullspace_tangent
from .deflation import DECREASING, BranchScan, DeflationParams, NewtonControl, scan_branches
from .errors import ConfigError, EvaluationError, SolverError
from .stepper import StepControl, StopRule, newton_fixed_lambda, next_h, step_from
from .trace import CurvePoint, Trace

VERTICAL = "vertical"
HORIZONTAL = "horizontal"
NORMAL = "normal"

REJECT_EVENT = {
    "distance_u": "step_rejected_distance",
    "distance_lambda": "step_rejected_distance",
    "sign": "step_rejected_sign",
    "angle": "step_rejected_angle",
    "crossing": "step_rejected_crossing",
}

# consecutive corrector failures at h_min that count as a stall
STALL_FAILURES = 3


@dataclass(frozen=True)
class SafeguardParams:
    """Thresholds for the safeguards and the two turning-point procedures.

    ``eps_lambda_star`` is the magnitude added to the lam-component of the
    secant tangent in the vertical procedure; its sign follows ``v_lam``.
    ``delta_lambda`` defaults to ``10 * eps_lambda``.
    """

    delta_maxU: float
    delta_maxL: float
    delta_crit: float
    c_min: float = 0.95
    eps_lambda: float = 1e-5
    eps_lambda_star: float = 0.2
    delta_lambda: float | None = None
    eps_diff: float = 1e-7

    def __post_init__(self):
        if self.delta_lambda is None:
            object.__setattr__(self, "delta_lambda", 10.0 * self.eps_lambda)

    @classmethod
    def from_region(cls, lam_span: float, u_span: float, **overrides) -> "SafeguardParams":
        """Distance thresholds derived from the extent of the difficult region."""
        base = dict(delta_maxL=lam_span / 10.0, delta_maxU=u_span / 5.0,
                    delta_crit=u_span / 4.0)
        base.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**base)

    def violations(self) -> list[str]:
        out = []
        if not 0.0 < self.c_min < 1.0:
            out.append(f"c_min must lie in (0, 1), got {self.c_min}")
        for name in ("delta_maxU", "delta_maxL", "delta_crit", "eps_lambda",
                     "eps_lambda_star", "delta_lambda", "eps_diff"):
            val = getattr(self, name)
            if not (isinstance(val, (int, float)) and val > 0):
                out.append(f"{name} must be positive, got {val}")
        if (isinstance(self.delta_crit, (int, float)) and isinstance(self.delta_maxU, (int, float))
                and not self.delta_crit > self.delta_maxU):
            out.append(f"delta_crit ({self.delta_crit}) should always be greater than "
                       f"delta_maxU ({self.delta_maxU})")
        return out

    def validate(self) -> "SafeguardParams":
        bad = self.violations()
        if bad:
            raise ConfigError(bad)
        return self


@dataclass
class Regime:
    kind: str = NORMAL
    basis: BranchScan | None = None


def classify(scan: BranchScan | None, sg: SafeguardParams) -> Regime:
    """Horizontal only when a close branch is getting closer; otherwise vertical."""
    if scan is None or not scan.solutions:
        return Regime(NORMAL, scan)
    if (scan.n_branches >= 2 and scan.delta is not None and scan.delta < sg.delta_crit
            and scan.trend == DECREASING):
        return Regime(HORIZONTAL, scan)
    return Regime(VERTICAL, scan)


@dataclass
class Verdict:
    accepted: bool
    reason: str | None = None
    value: float = 0.0

    def __bool__(self):
        return self.accepted


def check_safeguards(prev: CurvePoint, cand: CurvePoint, sg: SafeguardParams,
                     angle_active: bool = True, sign_active: bool = True) -> Verdict:
    """Accept ``cand`` as the successor of ``prev`` or name the first violated test.

    Order: u-distance, lam-distance, sign of ``v_lam`` (only when
    ``sign_active``), tangent cosine (only when ``angle_active``).
    """
    du = float(np.linalg.norm(cand.u - prev.u))
    if du > sg.delta_maxU:
        return Verdict(False, "distance_u", du)
    dl = abs(cand.lam - prev.lam)
    if dl > sg.delta_maxL:
        return Verdict(False, "distance_lambda", dl)
    if sign_active and cand.v_lam * prev.v_lam < 0.0:
        return Verdict(False, "sign", cand.v_lam * prev.v_lam)
    if angle_active:
        cos = float(np.dot(cand.v, prev.v))
        if cos < sg.c_min:
            return Verdict(False, "angle", cos)
    return Verdict(True)


@dataclass
class VerticalJump:
    z: CurvePoint          # Z* with its own (oriented) nullspace tangent
    w_star: np.ndarray     # stepping direction for the next predictor
    delta_lambda: float    # offset actually used


def vertical_turning_point(problem, x_i: CurvePoint, sg: SafeguardParams, ctl: StepControl,
                           rng=None) -> VerticalJump | None:
    """Jump past a vertical limit point or cusp.

    Newton at frozen ``lam_i +- delta_lambda`` gives ``Z*``; the secant from
    ``x_i`` to ``Z*`` is tilted by ``+-eps_lambda_star`` in its lam-component so
    the next predictor cannot be vertical. On Newton failure the offset is
    halved once. Returns None if both attempts fail.
    """
    sign = 1.0 if x_i.v_lam >= 0.0 else -1.0
    eps_star = sign * sg.eps_lambda_star
    dlam = sg.delta_lambda
    for _ in range(2):
        lam_z = x_i.lam + sign * dlam
        res = newton_fixed_lambda(problem, x_i.u, lam_z, tol=ctl.eps_F, max_iters=30)
        if res.converged:
            break
        dlam *= 0.5
    else:
        return None
    z_x = np.append(res.u, lam_z)
    W = z_x - x_i.x
    nw = np.linalg.norm(W)
    if not nw > 0:
        return None
    W = W / nw
    W_star = W.copy()
    W_star[-1] += eps_star
    W_star /= np.linalg.norm(W_star)
    try:
        t = nullspace_tangent(problem.jacobian_x(z_x), hint=W_star, rng=rng)
    except (SolverError, EvaluationError):
        t = W_star.copy()
    return VerticalJump(CurvePoint.from_x(z_x, t, h=0.0, iters=res.iterations), W_star, dlam)


@dataclass
class HorizontalResult:
    outcome: str                      # "coincide", "frozen" or "bifurcation"
    principal: list = field(default_factory=list)
    secondary: list = field(default_factory=list)
    y0: CurvePoint | None = None      # Y_i carrying the resume tangent -w
    resume: CurvePoint | None = None
    gap: float = 0.0
    rounds: int = 0


def _approach(v, axis) -> float:
    return float(np.dot(v[:-1], axis))


def _crossed(cur: CurvePoint, cand: CurvePoint, other: CurvePoint, c_min: float) -> bool:
    """Has ``cand`` landed on the other branch near a cusp?

    Only applies when both branches run nearly parallel (tangent cosine at
    least ``c_min``), which is how cusp branches approach their tip; transversal
    crossings are left alone. The tip is estimated where the two tangent lines
    pass closest, and the candidate's side is measured across their bisector.
    """
    v, w = cur.v, other.v
    if float(np.dot(v, w)) < c_min:
        return False
    d = other.x - cur.x
    # closest points cur.x + a v and other.x + b w of the two tangent lines
    G = np.array([[1.0, -float(np.dot(v, w))], [float(np.dot(v, w)), -1.0]])
    rhs = np.array([float(np.dot(d, v)), float(np.dot(d, w))])
    try:
        a, b = np.linalg.solve(G, rhs)
        tip = 0.5 * (cur.x + a * v + other.x + b * w)
    except np.linalg.LinAlgError:
        tip = 0.5 * (cur.x + other.x)
    bis = v + w
    bis /= np.linalg.norm(bis)
    n = d - np.dot(d, bis) * bis
    if np.linalg.norm(n) == 0.0:
        return False
    own = float(np.dot(cur.x - tip, n))
    return own * float(np.dot(cand.x - tip, n)) < 0.0


def _guarded_advance(problem, cur: CurvePoint, h: float, sg, ctl, trace, branch, axis, other):
    """One safeguarded step for a branch inside the horizontal procedure.

    Returns ``(point, h)`` on success or ``(None, h)`` when the branch must be
    frozen: no acceptable point down to ``h_min``, ``v_lam`` changed sign, or
    the tangent's u-part along ``axis`` (pointing at the other branch) changed
    sign, meaning the branch slipped past the meeting point. A candidate that
    lands on the far side of the gap to ``other`` is rejected like a safeguard
    violation.
    """
    while True:
        out = step_from(problem, cur, cur.v, h, ctl)
        if out.converged:
            cand = out.point(h)
            verdict = check_safeguards(cur, cand, sg, angle_active=True, sign_active=False)
            if verdict and _crossed(cur, cand, other, sg.c_min):
                verdict = Verdict(False, "crossing", float(np.linalg.norm(cand.x - other.x)))
            if verdict:
                if cand.v_lam * cur.v_lam <= 0.0:
                    return None, h
                if _approach(cand.v, axis) * _approach(cur.v, axis) < 0.0:
                    return None, h
                return cand, next_h(ctl, h, out.iterations, True)
            trace.log(REJECT_EVENT[verdict.reason], h=h, value=verdict.value, branch=branch)
        else:
            trace.log("corrector_failed", h=h, status=out.status, iters=out.iterations,
                      branch=branch)
        if h <= ctl.h_min:
            return None, h
        h = max(h * ctl.h_dec, ctl.h_min)


def horizontal_turning_point(problem, x_i: CurvePoint, scan: BranchScan, sg: SafeguardParams,
                             ctl: StepControl, h: float, trace: Trace | None = None,
                             rng=None, max_rounds: int = 5000) -> HorizontalResult | None:
    """Advance the current and the closest secondary branch until they meet.

    Returns None when no secondary tangent can be computed. Rejections are
    logged to ``trace`` if given; points are not added to it.
    """
    if trace is None:
        trace = Trace(problem.label)
    y_u = scan.closest_other()
    if y_u is None:
        return None
    y_x = np.append(y_u, scan.lam)
    try:
        w = nullspace_tangent(problem.jacobian_x(y_x), rng=rng)
    except (SolverError, EvaluationError):
        return None
    v_sign = 1.0 if x_i.v_lam >= 0.0 else -1.0
    if w[-1] * v_sign < 0.0:
        w = -w
    y_i = CurvePoint.from_x(y_x, w)

    axis = y_i.u - x_i.u
    x_cur, y_cur = x_i, y_i
    h_p = h_s = h
    conv_p = conv_s = True
    principal, secondary = [], []
    rounds = 0
    while (np.linalg.norm(x_cur.x - y_cur.x) > sg.eps_diff and (conv_p or conv_s)
           and rounds < max_rounds):
        rounds += 1
        if conv_p:
            nxt, h_p = _guarded_advance(problem, x_cur, h_p, sg, ctl, trace, "principal",
                                        axis, y_cur)
            if nxt is None:
                conv_p = False
            else:
                principal.append(nxt)
                x_cur = nxt
        if conv_s:
            nxt, h_s = _guarded_advance(problem, y_cur, h_s, sg, ctl, trace, "secondary",
                                        -axis, x_cur)
            if nxt is None:
                conv_s = False
            else:
                secondary.append(nxt)
                y_cur = nxt
        if np.linalg.norm(y_cur.u - x_cur.u) >= 2.0 * sg.delta_crit:
            return HorizontalResult("bifurcation", principal, [], None, x_cur,
                                    float(np.linalg.norm(y_cur.u - x_cur.u)), rounds)
    gap = float(np.linalg.norm(x_cur.x - y_cur.x))
    outcome = "coincide" if gap <= sg.eps_diff else "frozen"
    if outcome == "frozen":
        principal, secondary = _prune_crossings(x_i, y_i, principal, secondary, x_cur, y_cur,
                                                ctl.h_min)
        x_end = principal[-1] if principal else x_i
        y_end = secondary[-1] if secondary else y_i
        gap = float(np.linalg.norm(x_end.x - y_end.x))
    flipped = [CurvePoint(p.u, p.lam, -p.v, p.h, p.iters) for p in reversed(secondary)]
    y_resume = CurvePoint(y_i.u, y_i.lam, -w, h, 0)
    return HorizontalResult(outcome, principal, flipped, y_resume, y_resume, gap, rounds)


def _prune_crossings(x_i, y_i, principal, secondary, x_end, y_end, h_min):
    """Drop points that slipped across the meeting point of the two branches.

    Near a cusp both branches share a tangent, so a step can land on the other
    branch without any sign change. The meeting point ``M`` is estimated as the
    midpoint of the final points; each branch keeps only points on its own side
    of ``M`` (measured across the common tangent) that approach ``M``
    monotonically. Points closer to ``M`` than ten times the raw end gap (or
    ten minimal steps) are dropped as well: at that scale the side test cannot
    be resolved.
    """
    M = 0.5 * (x_end.x + y_end.x)
    radius = 10.0 * max(float(np.linalg.norm(x_end.x - y_end.x)), h_min)
    t = x_end.v + y_end.v
    if np.linalg.norm(t) < 1e-8:
        t = x_end.v
    t = t / np.linalg.norm(t)
    n = y_i.x - x_i.x
    n = n - np.dot(n, t) * t
    if np.linalg.norm(n) <= 1e-12 * (1.0 + np.linalg.norm(y_i.x - x_i.x)):
        return principal, secondary

    def keep(start, pts):
        ref = np.dot(start.x - M, n)
        last = np.linalg.norm(start.x - M)
        out = []
        for p in pts:
            d = np.linalg.norm(p.x - M)
            if np.dot(p.x - M, n) * ref > 0.0 and radius <= d < last:
                out.append(p)
                last = d
        return out

    if np.dot(x_i.x - M, n) * np.dot(y_i.x - M, n) >= 0.0:
        return principal, secondary
    return keep(x_i, principal), keep(y_i, secondary)


def _residual_defined(problem, pt: CurvePoint) -> bool:
    try:
        return bool(np.all(np.isfinite(problem.residual(pt.u, pt.lam))))
    except EvaluationError:
        return False


def trace_improved(problem, start: CurvePoint, ctl: StepControl, sg: SafeguardParams,
                   defl: DeflationParams = DeflationParams(), stop: StopRule = StopRule(),
                   newton_ctl: NewtonControl | None = None, rng=None) -> Trace:
    """Safeguarded continuation with deflation scans and turning-point methods.

    A scan runs at the start point and after every ``defl.period`` accepted
    steps. A scan that classifies the regime as horizontal triggers the
    horizontal procedure at once. Exhausting the step length (a safeguard
    rejection at ``h_min`` or repeated corrector failure there) triggers the
    vertical procedure. The trace ends on a stop rule, or early when a
    turning-point procedure cannot make progress.
    """
    ctl.validate()
    sg.validate()
    bad = defl.violations()
    if bad:
        raise ConfigError(bad)
    if newton_ctl is None:
        newton_ctl = NewtonControl(tol=ctl.eps_F)
    if rng is None:
        rng = np.random.default_rng(0)

    trace = Trace(problem.label)
    trace.add_point(start)
    pt, v, h = start, start.v, ctl.h
    regime = Regime()
    prev_scan: BranchScan | None = None
    since_scan = defl.period       # scan at the start point
    angle_active = True
    stall = 0
    attempts = 0
    tp_streak = 0                  # vertical jumps without an ordinary accepted step
    h_streak = 0                   # horizontal calls without an ordinary accepted step

    def finish_early(reason):
        trace.log("h_exhausted", h=h, lam=pt.lam)
        trace.finish(reason, completed=False)
        return trace

    while True:
        reason = stop.reached(trace)
        if reason:
            trace.finish(reason, completed=True)
            return trace
        if attempts >= stop.max_attempts:
            trace.finish("max attempts reached", completed=True)
            return trace

        if since_scan >= defl.period:
            since_scan = 0
            if not _residual_defined(problem, pt):
                trace.log("scan_skipped", lam=pt.lam)
            else:
                scan = scan_branches(problem, CurvePoint(pt.u, pt.lam, v), prev_scan, defl,
                                     newton_ctl)
                trace.log("branch_scan", lam=scan.lam, n=scan.n_branches,
                          delta=scan.delta, trend=scan.trend)
                regime = classify(scan, sg)
                if scan.solutions:
                    prev_scan = scan
                if regime.kind == HORIZONTAL:
                    if h_streak >= 2:
                        trace.log("tp_failed", method="horizontal", reason="no progress")
                        trace.finish("turning-point methods made no progress", completed=False)
                        return trace
                    res = horizontal_turning_point(problem, CurvePoint(pt.u, pt.lam, v, pt.h,
                                                   pt.iters), scan, sg, ctl, h, trace, rng)
                    if res is None:
                        trace.log("tp_failed", method="horizontal", reason="secondary tangent")
                    else:
                        h_streak += 1
                        for p in res.principal:
                            trace.add_point(p)
                        trace.log("horizontal_tp_applied", outcome=res.outcome,
                                  n_principal=len(res.principal),
                                  n_secondary=len(res.secondary), gap=res.gap)
                        if res.outcome == "bifurcation":
                            trace.log("bifurcation_passed", separation=res.gap)
                            pt, v = res.resume, res.resume.v
                        else:
                            if res.outcome == "frozen":
                                trace.log("splice_gap", gap=res.gap)
                            for p in res.secondary:
                                trace.add_point(p)
                            trace.add_point(res.y0)
                            pt, v = res.y0, res.y0.v
                        prev_scan = None
                        regime = Regime()
                        angle_active = True
                        stall = 0
                        continue

        attempts += 1
        out = step_from(problem, pt, v, h, ctl)
        exhausted = False
        if out.converged:
            cand = out.point(h)
            prev = CurvePoint(pt.u, pt.lam, v)
            verdict = check_safeguards(prev, cand, sg, angle_active=angle_active,
                                       sign_active=regime.kind == VERTICAL)
            if verdict:
                trace.add_point(cand)
                pt, v = cand, cand.v
                h = next_h(ctl, h, out.iterations, True)
                angle_active = True
                stall = 0
                tp_streak = h_streak = 0
                since_scan += 1
                continue
            trace.log(REJECT_EVENT[verdict.reason], h=h, value=verdict.value)
            exhausted = h <= ctl.h_min
        else:
            trace.log("corrector_failed", h=h, status=out.status, iters=out.iterations)
            if h <= ctl.h_min:
                stall += 1
                exhausted = stall >= STALL_FAILURES
        if not exhausted:
            h = max(h * ctl.h_dec, ctl.h_min)
            continue

        # step length exhausted: vertical turning-point jump
        stall = 0
        jump = vertical_turning_point(problem, CurvePoint(pt.u, pt.lam, v), sg, ctl, rng)
        if jump is None:
            trace.log("tp_failed", method="vertical", reason="newton failed")
            return finish_early("h exhausted at h_min")
        if tp_streak >= 50:
            trace.log("tp_failed", method="vertical", reason="no progress")
            return finish_early("turning-point methods made no progress")
        tp_streak += 1
        trace.log("vertical_tp_applied", lam_z=jump.z.lam, delta_lambda=jump.delta_lambda)
        trace.add_point(jump.z)
        pt, v = jump.z, jump.w_star
        angle_active = False
        h = ctl.h_min if math.isfinite(ctl.h_min) else h
