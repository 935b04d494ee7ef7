"""Trace files: points, events, summary and (optionally) full FEM fields.

Floats are written with ``repr``, the shortest decimal string that parses back
to the same double, so :func:`read_points` reproduces the in-memory values
exactly and two runs with the same configuration produce identical bytes.
"""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .trace import Trace

POINTS_FILE = "points.csv"
EVENTS_FILE = "events.csv"
SUMMARY_FILE = "summary.json"
FIELDS_FILE = "fields.csv"


def _fmt(x) -> str:
    return repr(float(x))


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        # JSON has no inf/nan; keep them readable and unambiguous
        return v if math.isfinite(v) else repr(v)
    return obj if obj is None or isinstance(obj, str) else str(obj)


def value_columns(problem) -> list[str]:
    """``u`` for a scalar unknown, ``diag`` (the declared diagnostic) otherwise."""
    return ["u"] if problem.dim_u == 1 else ["diag"]


def points_rows(trace: Trace, problem):
    scalar = problem.dim_u == 1
    for i, pt in enumerate(trace.points):
        val = pt.u[0] if scalar else problem.diagnostic(pt.u)
        yield [str(i), _fmt(pt.lam), _fmt(val), _fmt(pt.v_lam), _fmt(pt.h), str(int(pt.iters))]


def summarize(trace: Trace, extra: dict | None = None) -> dict:
    lams = trace.lams
    doc = {
        "problem": trace.problem_label,
        "reason": trace.reason,
        "completed": bool(trace.completed),
        "n_points": len(trace),
        "lambda_min": float(lams.min()) if len(lams) else None,
        "lambda_max": float(lams.max()) if len(lams) else None,
        "event_counts": dict(sorted(trace.event_counts().items())),
    }
    if extra:
        doc.update(extra)
    return _jsonable(doc)


def write_trace(trace: Trace, problem, out_dir, extra_summary: dict | None = None,
                field_every: int = 0) -> dict[str, Path]:
    """Write the trace files into ``out_dir`` (created if needed); returns their paths."""
    if len(trace) == 0:
        raise ValueError("cannot write an empty trace")
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = {"points": out / POINTS_FILE, "events": out / EVENTS_FILE,
             "summary": out / SUMMARY_FILE}

    with open(paths["points"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "lambda", *value_columns(problem), "v_lambda", "h", "iters"])
        w.writerows(points_rows(trace, problem))

    with open(paths["events"], "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["index", "kind", "payload"])
        for ev in trace.events:
            w.writerow([ev.index, ev.kind,
                        json.dumps(_jsonable(ev.payload), sort_keys=True, separators=(",", ":"))])

    with open(paths["summary"], "w") as fh:
        json.dump(summarize(trace, extra_summary), fh, indent=2, sort_keys=True)
        fh.write("\n")

    if field_every and problem.dim_u > 1:
        paths["fields"] = out / FIELDS_FILE
        with open(paths["fields"], "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["index", "lambda", *[f"u{j}" for j in range(problem.dim_u)]])
            last = len(trace) - 1
            for i, pt in enumerate(trace.points):
                if i % field_every == 0 or i == last:
                    w.writerow([i, _fmt(pt.lam), *map(_fmt, pt.u)])
    return paths


@dataclass
class PointsTable:
    header: list[str]
    index: np.ndarray
    lam: np.ndarray
    value: np.ndarray
    v_lam: np.ndarray
    h: np.ndarray
    iters: np.ndarray


def read_points(path) -> PointsTable:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    header, body = rows[0], rows[1:]
    cols = list(zip(*body)) if body else [[] for _ in header]
    return PointsTable(header=header,
                       index=np.array(cols[0], dtype=int),
                       lam=np.array(cols[1], dtype=float),
                       value=np.array(cols[2], dtype=float),
                       v_lam=np.array(cols[3], dtype=float),
                       h=np.array(cols[4], dtype=float),
                       iters=np.array(cols[5], dtype=int))


def read_events(path) -> list[tuple[int, str, dict]]:
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))[1:]
    return [(int(i), kind, json.loads(payload)) for i, kind, payload in rows]
