import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from pathtrace.bordered import BorderedLU, BorderedSystem, nullspace_tangent, solve_bordered
from pathtrace.errors import SolverError

sizes = st.integers(1, 6)


@st.composite
def full_rank(draw):
    n = draw(sizes)
    A = draw(arrays(float, (n, n + 1), elements=st.floats(-3, 3)))
    # keep the draw away from rank deficiency
    if np.linalg.svd(A, compute_uv=False).min() < 1e-2:
        A = A + np.eye(n, n + 1)
    return A


@given(full_rank(), st.integers(0, 2**32 - 1))
@settings(max_examples=80, deadline=None)
def test_nullspace_tangent_is_unit_and_in_the_kernel(A, seed):
    t = nullspace_tangent(A, rng=np.random.default_rng(seed))
    assert np.linalg.norm(t) == pytest.approx(1.0)
    assert np.linalg.norm(A @ t) <= 1e-9 * max(np.linalg.norm(A), 1.0)
    assert t[-1] >= 0.0


@given(full_rank(), st.integers(0, 2**32 - 1))
@settings(max_examples=50, deadline=None)
def test_hint_fixes_orientation(A, seed):
    t = nullspace_tangent(A, rng=np.random.default_rng(seed))
    flipped = nullspace_tangent(A, hint=-t)
    assert flipped == pytest.approx(-t, abs=1e-8)


def test_solve_matches_dense_solver():
    rng = np.random.default_rng(1)
    A = rng.standard_normal((4, 5))
    b = rng.standard_normal(5)
    top = rng.standard_normal(4)
    y = solve_bordered(BorderedSystem(A, b, top, 0.7))
    assert y == pytest.approx(np.linalg.solve(np.vstack([A, b]), np.append(top, 0.7)))


def test_factor_reused_for_several_right_hand_sides():
    A = np.array([[1.0, 2.0]])
    lu = BorderedLU(A, np.array([0.0, 1.0]))
    assert lu.solve([1.0], 0.0) == pytest.approx([1.0, 0.0])
    assert lu.solve([0.0], 1.0) == pytest.approx([-2.0, 1.0])


def test_singular_border_raises():
    A = np.array([[1.0, 0.0]])
    with pytest.raises(SolverError):
        BorderedLU(A, np.array([1.0, 0.0]))


def test_shape_mismatch_is_rejected():
    with pytest.raises(ValueError):
        BorderedLU(np.ones((2, 2)), np.ones(2))


def test_rank_deficient_jacobian_cannot_give_a_tangent():
    with pytest.raises(SolverError):
        nullspace_tangent(np.zeros((2, 3)), max_tries=3)
