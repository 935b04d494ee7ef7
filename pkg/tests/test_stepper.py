import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pathtrace.errors import ConfigError, EvaluationError
from pathtrace.problems import AnalyticProblem, FunctionProblem
from pathtrace.stepper import (CONVERGED, StepControl, StopRule, adapt_h, mp_correct, newton_fixed_lambda,
                               next_h, predict, start_point, step_from, trace_standard)


def circle():
    return FunctionProblem(lambda u, lam: np.array([u[0] ** 2 + lam**2 - 1.0]), dim_u=1,
                           jacobian=lambda u, lam: np.array([[2 * u[0], 2 * lam]]), label="circle")


def test_predict_is_componentwise():
    assert predict(np.array([1.0, 2.0]), np.array([0.5, -1.0]), 0.2) == pytest.approx([1.1, 1.8])


def test_corrector_lands_on_the_circle_with_a_kernel_tangent():
    prob, ctl = circle(), StepControl()
    out = mp_correct(prob, np.array([1.1, 0.2]), np.array([0.0, 1.0]), ctl)
    assert out.status == CONVERGED
    assert np.linalg.norm(out.x) == pytest.approx(1.0, abs=1e-9)
    assert abs(out.v @ out.x) < 1e-9           # tangent is perpendicular to the radius
    assert np.linalg.norm(out.v) == pytest.approx(1.0)


def test_corrector_reports_failure_instead_of_raising():
    prob = AnalyticProblem("fd")
    out = mp_correct(prob, np.array([1e80, 1.0]), np.array([0.0, 1.0]), StepControl(k_max=6))
    assert not out.converged


@given(h=st.floats(1e-4, 10), it=st.integers(0, 30), ok=st.booleans())
@settings(max_examples=200, deadline=None)
def test_step_adaptation_rules(h, it, ok):
    ctl = StepControl(h=10, h_min=1e-4, h_max=5.0)
    new = next_h(ctl, h, it, ok)
    assert ctl.h_min <= new
    assert new <= max(ctl.h_max, h)
    if not ok or it > ctl.K_max:
        assert new == max(h * ctl.h_dec, ctl.h_min)
    elif it < ctl.K_min:
        assert new == min(h * ctl.h_inc, ctl.h_max)
    else:
        assert new == h


def test_adapt_h_returns_a_new_control():
    ctl = StepControl(h=0.1)
    assert adapt_h(ctl, 2, True).h == pytest.approx(0.15)
    assert adapt_h(ctl, 2, False).h == pytest.approx(0.05)
    assert ctl.h == 0.1


def test_step_control_violations():
    assert StepControl(h=1e-5).violations()
    assert StepControl(h_inc=0.9).violations()
    assert StepControl(K_min=12).violations()
    with pytest.raises(ConfigError):
        StepControl(eps_F=0).validate()
    assert StopRule(lambda_min=1, lambda_max=0).violations()


def test_newton_fixed_lambda():
    res = newton_fixed_lambda(AnalyticProblem("fa"), [1.0], 10.0)
    assert res and res.u[0] == pytest.approx(math.sqrt((100 - 10 / 3) / 1000))
    assert not newton_fixed_lambda(AnalyticProblem("fa"), [1.0], 400.0)   # past the fold


def test_start_point_orientation():
    prob = AnalyticProblem("fb")
    fwd = start_point(prob, [1.0], 1.0, StepControl())
    back = start_point(prob, [1.0], 1.0, StepControl(), direction=-1)
    assert fwd.v_lam > 0 and back.v == pytest.approx(-fwd.v)
    with pytest.raises(EvaluationError):
        start_point(AnalyticProblem("fa"), [1.0], 400.0, StepControl())


def test_step_from_follows_the_circle():
    prob, ctl = circle(), StepControl()
    pt = start_point(prob, [0.9], 0.0, ctl)
    out = step_from(prob, pt, pt.v, 0.3, ctl)
    assert out.converged and out.x[1] > 0


def test_standard_trace_goes_round_the_circle():
    prob, ctl = circle(), StepControl(h=0.1, h_max=0.3)
    start = start_point(prob, [0.9], 0.0, ctl)
    tr = trace_standard(prob, start, ctl, StopRule(max_points=60))
    assert tr.completed and tr.reason == "max points reached"
    angles = np.unwrap(np.arctan2(tr.lams, tr.us[:, 0]))
    assert np.all(np.diff(angles) > 0)              # no backtracking on a smooth loop
    assert angles[-1] - angles[0] > 2 * math.pi      # full revolution


def test_standard_trace_stops_at_h_min():
    prob = AnalyticProblem("fa")
    ctl = StepControl(h=0.1)
    tr = trace_standard(prob, start_point(prob, [10.0], 1.0, ctl), ctl, StopRule(lambda_max=400))
    assert not tr.completed
    assert tr.events[-1].kind == "h_exhausted"
    assert replace(ctl).h == 0.1
