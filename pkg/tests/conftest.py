from __future__ import annotations

import functools
import sys
from pathlib import Path

import pytest

TESTS = Path(__file__).resolve().parent
ROOT = TESTS.parent
CONFIGS = ROOT / "configs"
sys.path.insert(0, str(TESTS))

# criterion number -> (passed, detail); filled by test_acceptance
ACCEPTANCE: dict[int, tuple[bool, str]] = {}


@functools.lru_cache(maxsize=None)
def run_config(name: str, **overrides):
    """(config, problem, trace) for ``configs/<name>.json``; cached per session."""
    from pathtrace.cli import run_trace
    from pathtrace.config import load_config

    cfg = load_config(CONFIGS / f"{name}.json", overrides or None)
    problem, trace = run_trace(cfg)
    return cfg, problem, trace


@pytest.fixture
def traced():
    return run_config


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[num]
        terminalreporter.write_line(f"criterion {num}: {'PASS' if ok else 'FAIL'}  {detail}")
