"""Curve points with their events, kept in the trace container both drivers share."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

EVENT_KINDS = (
    "step_rejected_angle",
    "step_rejected_distance",
    "step_rejected_sign",
    "step_rejected_crossing",
    "corrector_failed",
    "vertical_tp_applied",
    "horizontal_tp_applied",
    "bifurcation_passed",
    "splice_gap",
    "branch_scan",
    "scan_skipped",
    "tp_failed",
    "h_exhausted",
)


@dataclass
class CurvePoint:
    """Converged point ``x = (u, lam)`` with unit tangent ``v`` (length N+1)."""

    u: np.ndarray
    lam: float
    v: np.ndarray
    h: float = 0.0
    iters: int = 0

    @property
    def x(self) -> np.ndarray:
        return np.append(self.u, self.lam)

    @property
    def v_lam(self) -> float:
        return float(self.v[-1])

    @classmethod
    def from_x(cls, x, v, h=0.0, iters=0) -> "CurvePoint":
        x = np.asarray(x, dtype=float)
        return cls(u=x[:-1].copy(), lam=float(x[-1]), v=np.asarray(v, dtype=float).copy(),
                   h=float(h), iters=int(iters))


@dataclass
class TraceEvent:
    kind: str
    index: int
    payload: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.kind not in EVENT_KINDS:
            raise ValueError(f"unknown event kind {self.kind!r}")


@dataclass
class Trace:
    problem_label: str
    points: list[CurvePoint] = field(default_factory=list)
    events: list[TraceEvent] = field(default_factory=list)
    reason: str = ""
    completed: bool = False

    def add_point(self, pt: CurvePoint) -> int:
        self.points.append(pt)
        return len(self.points) - 1

    def log(self, kind: str, **payload) -> TraceEvent:
        ev = TraceEvent(kind, len(self.points) - 1, payload)
        self.events.append(ev)
        return ev

    def finish(self, reason: str, completed: bool):
        self.reason = reason
        self.completed = completed

    @property
    def lams(self) -> np.ndarray:
        return np.array([p.lam for p in self.points])

    @property
    def us(self) -> np.ndarray:
        return np.array([p.u for p in self.points])

    def event_counts(self) -> dict[str, int]:
        counts: dict[str, int] = {}
        for ev in self.events:
            counts[ev.kind] = counts.get(ev.kind, 0) + 1
        return counts

    def events_of(self, kind: str) -> list[TraceEvent]:
        return [ev for ev in self.events if ev.kind == kind]

    def __len__(self):
        return len(self.points)
