"""Command line entry point: ``pathtrace run <config.json>`` and ``pathtrace problems``.

Exit status of ``run``: 0 when the trace ends on a stop rule, 2 when it ends
early (the reason is printed and recorded in ``summary.json``), 1 on a
configuration error, in which case no output file is written.
"""
from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from . import __version__
from ._accel import backend_name
from .config import RunConfig, load_config
from .errors import ConfigError, EvaluationError, PathTraceError
from .output import write_trace
from .problems import DESCRIPTIONS
from .robust import SafeguardParams, trace_improved
from .stepper import start_point, trace_standard

log = logging.getLogger("pathtrace")

EXIT_OK, EXIT_CONFIG, EXIT_EARLY = 0, 1, 2

FEM_DESCRIPTIONS = {
    "bratu": "gamma u'' + lam exp(gamma u) = 0 on (0,1) (Bratu fold near lam=3.5138)",
    "manufactured": "u^2 - u'' = r(x, lam), exact u = zeta lam^eta (1 - lam^eta) x (1 - x)",
}

# command-line flag -> config key
_FLAG_KEYS = {
    "mesh_elems": "mesh_elems", "gamma": "gamma", "zeta": "zeta", "eta": "eta",
    "deflation_period": "deflation_period", "deflation_power": "deflation_power",
    "deflation_shift": "deflation_shift",
}
_SAFEGUARD_FIELDS = [f.name for f in fields(SafeguardParams)]


def run_trace(cfg: RunConfig):
    """Build the problem, find the start point and trace. Returns ``(problem, trace)``."""
    problem = cfg.make_problem()
    rng = np.random.default_rng(cfg.seed)
    try:
        start = start_point(problem, cfg.initial_guess(problem), cfg.lambda0, cfg.step,
                            direction=cfg.direction, rng=rng)
    except EvaluationError as err:
        raise ConfigError(f"start point: {err}") from None
    if cfg.mode == "standard":
        trace = trace_standard(problem, start, cfg.step, cfg.stop)
    else:
        trace = trace_improved(problem, start, cfg.step, cfg.safeguards, cfg.deflation,
                               cfg.stop, rng=rng)
    return problem, trace


def execute(cfg: RunConfig, out_dir) -> int:
    """Run a validated config and write its files. Returns the exit status."""
    try:
        problem, trace = run_trace(cfg)
    except ConfigError as err:
        _report_config(err)
        return EXIT_CONFIG
    extra = {"mode": cfg.mode, "seed": cfg.seed, "config": cfg.to_dict()}
    try:
        paths = write_trace(trace, problem, out_dir, extra_summary=extra,
                            field_every=cfg.field_every)
    except OSError as err:
        print(f"error: cannot write output to {out_dir}: {err}", file=sys.stderr)
        return EXIT_CONFIG
    status = EXIT_OK if trace.completed else EXIT_EARLY
    lams = trace.lams
    print(f"{cfg.problem} [{cfg.mode}] {len(trace)} points, lambda in "
          f"[{lams.min():.6g}, {lams.max():.6g}]: {trace.reason}")
    print(f"wrote {paths['points'].parent}")
    return status


def _report_config(err: ConfigError):
    print("configuration error:", file=sys.stderr)
    for item in err.violations:
        print(f"  - {item}", file=sys.stderr)


def _overrides(args) -> dict:
    out = {}
    if args.mode is not None:
        out["mode"] = args.mode
    for attr, key in _FLAG_KEYS.items():
        out[key] = getattr(args, attr)
    for name in _SAFEGUARD_FIELDS:
        out[name] = getattr(args, "sg_" + name)
    return {k: v for k, v in out.items() if v is not None}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="pathtrace",
                                     description="Safeguarded Moore-Penrose continuation.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="trace a curve from a JSON config")
    run.add_argument("config", help="flat JSON configuration file")
    run.add_argument("--mode", choices=("standard", "improved"))
    run.add_argument("--out", help="output directory (default: runs/<config name>-<mode>)")
    run.add_argument("--mesh-elems", type=int)
    run.add_argument("--gamma", type=float)
    run.add_argument("--zeta", type=float)
    run.add_argument("--eta", type=float)
    run.add_argument("--deflation-period", type=int)
    run.add_argument("--deflation-power", type=float)
    run.add_argument("--deflation-shift", type=float)
    for name in _SAFEGUARD_FIELDS:
        run.add_argument("--" + name.replace("_", "-"), dest="sg_" + name, type=float,
                         metavar=name.upper(), help=f"safeguard parameter {name}")

    sub.add_parser("problems", help="list registered problems")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "problems":
        for pid, text in {**DESCRIPTIONS, **FEM_DESCRIPTIONS}.items():
            print(f"{pid:<13} {text}")
        return EXIT_OK

    try:
        cfg = load_config(args.config, _overrides(args))
    except ConfigError as err:
        _report_config(err)
        return EXIT_CONFIG
    out_dir = args.out or cfg.out or str(Path("runs") / f"{Path(args.config).stem}-{cfg.mode}")
    log.debug("backend %s, seed %d, output %s", backend_name(), cfg.seed, out_dir)
    try:
        return execute(cfg, out_dir)
    except PathTraceError as err:
        print(f"error: {err}", file=sys.stderr)
        return EXIT_EARLY


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
