"""Run configuration: a flat JSON document turned into validated parameter objects.

Every key is optional except ``problem``. Missing values come from the
package defaults, then from the per-problem preset in :data:`PRESETS`. All
problems with the document are collected and raised together as one
:class:`~pathtrace.errors.ConfigError`.
"""
from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from .deflation import DeflationParams
from .errors import ConfigError
from .problems import ANALYTIC, problem_ids
from .robust import SafeguardParams
from .stepper import StepControl, StopRule

MODES = ("standard", "improved")
DEFAULT_SEED = 20240101
SEED_ENV = "PATHTRACE_SEED"

_STEP_KEYS = tuple(f.name for f in fields(StepControl))
_SAFEGUARD_KEYS = tuple(f.name for f in fields(SafeguardParams))
_STOP_KEYS = tuple(f.name for f in fields(StopRule))
# deflation fields are prefixed in the document to keep the namespace flat
_DEFLATION_KEYS = {f"deflation_{f.name}": f.name for f in fields(DeflationParams)}
_FEM_KEYS = ("mesh_elems", "gamma", "zeta", "eta")
_RUN_KEYS = ("problem", "mode", "lambda0", "u0", "direction", "seed", "out",
             "field_every", "description")

KNOWN_KEYS = frozenset(_RUN_KEYS + _STEP_KEYS + _SAFEGUARD_KEYS + _STOP_KEYS
                       + tuple(_DEFLATION_KEYS) + _FEM_KEYS)

_INT_KEYS = {"K_min", "K_max", "k_max", "max_points", "max_attempts", "mesh_elems",
             "seed", "field_every", "deflation_period", "deflation_max_extra"}


def _cbrt(x: float) -> float:
    return float(np.cbrt(x))


# Per-problem defaults: start guess, tracing window and safeguard distances.
# The F_e distances are our own choice (none are published for that curve).
PRESETS: dict[str, dict] = {
    "fa": dict(lambda0=1.0, u0=10.0, lambda_min=0.5, lambda_max=400.0,
               delta_maxL=30.0, delta_maxU=1.6, delta_crit=2.0),
    "fb": dict(lambda0=-5.0, u0=_cbrt(2000 * 25 - 6 * 3125), lambda_min=-6.0, lambda_max=6.0,
               delta_maxL=1.0, delta_maxU=12.0, delta_crit=15.0),
    "fc": dict(lambda0=-3.0, u0=1.7, lambda_min=-3.5, lambda_max=3.0,
               delta_maxL=1.0, delta_maxU=10.0, delta_crit=12.5),
    "fd": dict(lambda0=_cbrt(0.01 * (-10.0) ** 5 - 50 * 100.0), u0=-10.0,
               lambda_min=-30.0, lambda_max=30.0,
               delta_maxL=4.0, delta_maxU=1.6, delta_crit=3.0),
    "fe": dict(lambda0=-5.0 + 20 + _cbrt(0.01 * (-10.0) ** 5 - 50 * 100.0),
               u0=20 + _cbrt(0.01 * (-10.0) ** 5 - 50 * 100.0),
               lambda_min=-10.0, lambda_max=50.0,
               delta_maxL=1.0, delta_maxU=1.0, delta_crit=3.0),
    "fe_inv": dict(lambda0=20 + _cbrt(0.01 * (-10.0) ** 5 - 50 * 100.0),
                   u0=-5.0 + 20 + _cbrt(0.01 * (-10.0) ** 5 - 50 * 100.0),
                   lambda_min=-10.0, lambda_max=50.0,
                   delta_maxL=1.0, delta_maxU=1.0, delta_crit=3.0),
    "cross": dict(lambda0=-3.0, u0=-3.0, lambda_min=-3.5, lambda_max=3.0,
                  delta_maxL=0.3, delta_maxU=0.3, delta_crit=2.0),
    "bratu": dict(lambda0=0.5, u0="zero", lambda_min=0.45, lambda_max=5.0,
                  delta_maxL=0.1, delta_maxU=0.02, delta_crit=0.025),
    "manufactured": dict(lambda0=0.5, u0="exact", lambda_min=0.4, lambda_max=1.01,
                         delta_maxL=0.02, delta_maxU=0.2, delta_crit=0.25),
}


@dataclass
class RunConfig:
    problem: str
    mode: str
    lambda0: float
    u0: object
    direction: float
    step: StepControl
    safeguards: SafeguardParams
    deflation: DeflationParams
    stop: StopRule
    fem: dict = field(default_factory=dict)
    seed: int = DEFAULT_SEED
    out: str | None = None
    field_every: int = 0
    description: str = ""

    def make_problem(self):
        from .problems import make_problem

        return make_problem(self.problem, **self.fem)

    def initial_guess(self, problem) -> np.ndarray:
        """Starting vector for the fixed-lambda Newton solve."""
        n = problem.dim_u
        if isinstance(self.u0, str):
            if self.u0 == "zero":
                return np.zeros(n)
            from .fem1d import interpolate_exact

            return interpolate_exact(problem.spec, problem.mesh, self.lambda0)
        arr = np.atleast_1d(np.asarray(self.u0, dtype=float))
        return np.full(n, arr[0]) if arr.size == 1 else arr.copy()

    def to_dict(self) -> dict:
        """Flat, fully resolved document (loading it again gives the same config)."""
        doc = {"problem": self.problem, "mode": self.mode, "lambda0": self.lambda0,
               "u0": self.u0, "direction": self.direction, "seed": self.seed,
               "field_every": self.field_every}
        for name in _STEP_KEYS:
            doc[name] = getattr(self.step, name)
        for name in _SAFEGUARD_KEYS:
            doc[name] = getattr(self.safeguards, name)
        for key, name in _DEFLATION_KEYS.items():
            doc[key] = getattr(self.deflation, name)
        for name in _STOP_KEYS:
            doc[name] = getattr(self.stop, name)
        doc.update(self.fem)
        # JSON has no infinity; unbounded values are dropped and re-defaulted
        return {k: v for k, v in doc.items()
                if not (isinstance(v, float) and math.isinf(v))}


def _number(key, value, bad):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        bad.append(f"{key}: expected a number, got {value!r}")
        return None
    if key in _INT_KEYS:
        if float(value) != int(value):
            bad.append(f"{key}: expected an integer, got {value!r}")
            return None
        return int(value)
    value = float(value)
    if math.isnan(value):
        bad.append(f"{key}: NaN is not allowed")
        return None
    return value


def _check_u0(value, bad):
    if isinstance(value, str):
        if value not in ("zero", "exact"):
            bad.append(f"u0: string value must be 'zero' or 'exact', got {value!r}")
        return value
    if isinstance(value, list):
        out = [_number("u0", v, bad) for v in value]
        if not out:
            bad.append("u0: empty list")
        return out
    return _number("u0", value, bad)


def build_config(doc: dict, overrides: dict | None = None) -> RunConfig:
    """Validate a parsed document (plus command-line overrides) into a RunConfig."""
    if not isinstance(doc, dict):
        raise ConfigError("configuration must be a JSON object of key/value pairs")
    doc = dict(doc)
    for key, value in (overrides or {}).items():
        if value is not None:
            doc[key] = value
    bad: list[str] = []

    unknown = sorted(set(doc) - KNOWN_KEYS)
    for key in unknown:
        bad.append(f"unknown key {key!r}")

    problem = doc.get("problem")
    if problem is None:
        bad.append("missing required key 'problem'")
        raise ConfigError(bad)
    problem = str(problem).strip().lower()
    if problem not in problem_ids():
        bad.append(f"problem: unknown id {problem!r}; expected one of {', '.join(problem_ids())}")
        raise ConfigError(bad)

    preset = PRESETS.get(problem, {})
    merged = {**preset, **{k: v for k, v in doc.items() if k not in unknown}}

    mode = str(merged.get("mode", "improved"))
    if mode not in MODES:
        bad.append(f"mode: expected one of {MODES}, got {mode!r}")

    values = {}
    for key, value in merged.items():
        if key in ("problem", "mode", "u0", "out", "description"):
            continue
        if key == "delta_lambda" and value is None:
            values[key] = None
            continue
        values[key] = _number(key, value, bad)

    u0 = _check_u0(merged.get("u0", 1.0), bad)
    if isinstance(u0, str) and problem in ANALYTIC:
        bad.append("u0: 'zero'/'exact' are only meaningful for the FEM problems")
    if u0 == "exact" and problem != "manufactured":
        bad.append("u0: 'exact' needs a problem with a known exact solution (manufactured)")

    if "lambda0" not in values or values["lambda0"] is None:
        bad.append("missing required key 'lambda0' (no preset for this problem)")
    direction = values.get("direction", 1.0)
    if direction is not None and direction == 0:
        bad.append("direction: must be nonzero (sign of the initial tangent's lambda part)")

    def pick(keys, rename=None):
        rename = rename or {}
        out = {}
        for key in keys:
            if key in values and values[key] is not None:
                out[rename.get(key, key)] = values[key]
        return out

    step = stop = sg = defl = None
    try:
        step = StepControl(**pick(_STEP_KEYS))
        bad.extend(step.violations())
    except TypeError as err:
        bad.append(str(err))
    stop = StopRule(**pick(_STOP_KEYS))
    bad.extend(stop.violations())
    defl = DeflationParams(**pick(_DEFLATION_KEYS, _DEFLATION_KEYS))
    bad.extend(defl.violations())

    sg_kwargs = pick(_SAFEGUARD_KEYS)
    missing = [k for k in ("delta_maxU", "delta_maxL", "delta_crit") if k not in sg_kwargs]
    if missing:
        bad.append(f"safeguard distances missing: {', '.join(missing)}")
    else:
        sg = SafeguardParams(**sg_kwargs)
        bad.extend(sg.violations())

    fem = {}
    if problem in ("bratu", "manufactured"):
        fem = pick(_FEM_KEYS)
        if fem.get("mesh_elems", 20) < 2:
            bad.append("mesh_elems must be >= 2")
        from .fem1d import FemProblemSpec

        kind = "bratu_modified" if problem == "bratu" else "manufactured"
        spec_kw = {k: v for k, v in fem.items() if k in ("gamma", "zeta", "eta")}
        bad.extend(FemProblemSpec(kind=kind, **spec_kw).violations())
    else:
        for key in _FEM_KEYS:
            if key in doc:
                bad.append(f"{key}: only applies to the FEM problems")

    field_every = values.get("field_every", 0) or 0
    if field_every < 0:
        bad.append("field_every must be >= 0")
    seed = values.get("seed", DEFAULT_SEED)
    env_seed = os.environ.get(SEED_ENV)
    if env_seed is not None and env_seed.strip():
        try:
            seed = int(env_seed)
        except ValueError:
            bad.append(f"{SEED_ENV}: expected an integer, got {env_seed!r}")
    if seed is not None and seed < 0:
        bad.append("seed must be >= 0")

    if isinstance(u0, list) and problem in ANALYTIC and len(u0) != 1:
        bad.append("u0: analytic problems have one unknown")

    if bad:
        raise ConfigError(bad)
    return RunConfig(problem=problem, mode=mode, lambda0=float(values["lambda0"]), u0=u0,
                     direction=float(math.copysign(1.0, direction)), step=step,
                     safeguards=sg, deflation=defl, stop=stop, fem=fem, seed=int(seed),
                     out=merged.get("out"), field_every=int(field_every),
                     description=str(merged.get("description", "")))


def load_config(path, overrides: dict | None = None) -> RunConfig:
    """Read and validate the JSON document at ``path``."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as err:
        raise ConfigError(f"cannot read {path}: {err.strerror or err}") from None
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"{path}: invalid JSON ({err})") from None
    return build_config(doc, overrides)
