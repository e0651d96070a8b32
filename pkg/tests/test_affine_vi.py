import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gamenewton import (
    AffineViProblem,
    Box,
    Polyhedron,
    enumerate_active_set_solution,
    natural_map_residual,
    solve_affine_vi,
    unbounded_box,
)
from gamenewton.errors import MultipleSolutions, NoSolution


def _box_problem(M, q, lo, hi):
    n = len(q)
    return AffineViProblem(
        M=np.asarray(M, float),
        q=np.asarray(q, float),
        sets=[Box(np.full(n, lo), np.full(n, hi))],
        dims=[n],
    )


def test_unconstrained_reduces_to_linear_solve():
    M = np.array([[2.0, 0.5], [0.5, 1.0]])
    q = np.array([-1.0, 2.0])
    p = AffineViProblem(M=M, q=q, sets=[unbounded_box(2)], dims=[2])
    sol = solve_affine_vi(p, np.zeros(2))
    assert sol.status == "Converged"
    assert np.allclose(M @ sol.a + q, 0.0, atol=1e-9)


def test_box_lcp_known_solution():
    # LCP: M = I, q = (-1, 2) on the nonnegative orthant -> a = (1, 0)
    p = _box_problem(np.eye(2), [-1.0, 2.0], 0.0, np.inf)
    sol = solve_affine_vi(p, np.array([5.0, 5.0]))
    assert sol.status == "Converged"
    assert np.allclose(sol.a, [1.0, 0.0], atol=1e-9)
    assert natural_map_residual(p, sol.a) <= 1e-9


def test_active_upper_bound():
    # pushes toward +inf in both coordinates, box caps at 2
    p = _box_problem(np.eye(2), [-10.0, -10.0], 0.0, 2.0)
    sol = solve_affine_vi(p, np.zeros(2))
    assert np.allclose(sol.a, [2.0, 2.0], atol=1e-9)


def test_enumeration_matches_newton_on_random_boxes():
    rng = np.random.default_rng(3)
    for _ in range(10):
        n = rng.integers(1, 4)
        A = rng.normal(size=(n, n))
        M = A @ A.T + n * np.eye(n)
        q = rng.normal(size=n)
        p = _box_problem(M, q, -1.0, 1.0)
        sol = solve_affine_vi(p, np.zeros(n))
        ref = enumerate_active_set_solution(p)
        assert np.allclose(sol.a, ref.a, atol=1e-8)


def test_enumeration_detects_multiple_solutions():
    # M = -I on [-1, 1]^1 with q = 0: both endpoints solve the VI
    p = _box_problem([[-1.0]], [0.0], -1.0, 1.0)
    with pytest.raises(MultipleSolutions):
        enumerate_active_set_solution(p)


def test_enumeration_no_solution():
    # strictly decreasing map on an open-ended box never satisfies the
    # stationarity sign conditions
    p = _box_problem([[0.0]], [-1.0], 0.0, np.inf)
    with pytest.raises(NoSolution):
        enumerate_active_set_solution(p)


def test_polyhedral_vi_with_duals():
    # projection of the unconstrained minimizer onto x1 + x2 <= 1
    M = np.eye(2)
    q = np.array([-1.0, -1.0])
    p = AffineViProblem(
        M=M, q=q, sets=[Polyhedron(A=np.array([[1.0, 1.0]]), b=np.array([1.0]))], dims=[2]
    )
    sol = solve_affine_vi(p, np.zeros(2))
    assert sol.status == "Converged"
    assert np.allclose(sol.a, [0.5, 0.5], atol=1e-8)
    assert sol.duals is not None and sol.duals[0] > 0


@settings(max_examples=25, deadline=None)
@given(st.integers(0, 10_000))
def test_residual_zero_iff_solution(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(1, 4))
    A = rng.normal(size=(n, n))
    M = A @ A.T + n * np.eye(n)
    q = rng.normal(size=n)
    p = _box_problem(M, q, -2.0, 2.0)
    sol = solve_affine_vi(p, np.zeros(n))
    assert natural_map_residual(p, sol.a) <= 1e-8
    # a deliberately perturbed point has a strictly larger residual
    bad = np.clip(sol.a + 0.5, -2.0, 2.0)
    if not np.allclose(bad, sol.a):
        assert natural_map_residual(p, bad) > natural_map_residual(p, sol.a)
