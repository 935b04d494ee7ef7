"""pathtrace: safeguarded Moore-Penrose continuation for F(u, lam) = 0.

The two drivers are :func:`trace_standard` (plain predictor/corrector with
adaptive steps) and :func:`trace_improved` (the same plus step safeguards,
deflation scans and the turning-point procedures).
"""
from .errors import ConfigError, DeflationError, EvaluationError, PathTraceError, SolverError
from .problems import AnalyticProblem, FunctionProblem, Problem, make_problem, problem_ids
from .robust import SafeguardParams, trace_improved
from .stepper import StepControl, StopRule, start_point, trace_standard
from .trace import CurvePoint, Trace, TraceEvent

__version__ = "0.1.0"

__all__ = [
    "AnalyticProblem", "ConfigError", "CurvePoint", "DeflationError", "EvaluationError",
    "FunctionProblem", "PathTraceError", "Problem", "SafeguardParams", "SolverError",
    "StepControl", "StopRule", "Trace", "TraceEvent", "make_problem", "problem_ids",
    "start_point", "trace_improved", "trace_standard",
]
