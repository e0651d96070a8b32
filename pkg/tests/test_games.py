import numpy as np
import pytest

from gamenewton import (
    CallableCost,
    GameProblem,
    QuadraticCost,
    check_monotonicity,
    check_strict_semicopositivity,
    critical_cone,
    game_hessian,
    orthant_cone,
    pseudogradient,
    quartic_game,
    quartic_solution,
    nonmonotone_semicopositive_game,
    standard_quadratic_game,
)
from gamenewton.errors import InputError


def test_quadratic_pseudogradient_matches_hand_computation():
    g = standard_quadratic_game()
    a = np.array([2.0, -1.0])
    F = pseudogradient(g, a)
    # own gradients of J1 = 0.5 a1^2 + 0.1 a1 a2 - a1, J2 = 0.5 a2^2 - 0.1 a1 a2 + 0.5 a2
    assert np.allclose(F, [2.0 + 0.1 * (-1.0) - 1.0, -1.0 - 0.1 * 2.0 + 0.5])


def test_game_hessian_assembles_blocks():
    g = standard_quadratic_game()
    H = game_hessian(g, np.zeros(2))
    assert np.allclose(H.assembled, [[1.0, 0.1], [-0.1, 1.0]])
    assert np.allclose(H.blocks[0][1], [[0.1]])


def test_game_hessian_is_state_dependent_for_quartic():
    g = quartic_game()
    H0 = game_hessian(g, quartic_solution()).assembled
    H1 = game_hessian(g, quartic_solution() + 0.5).assembled
    # cross terms vanish exactly at the equilibrium and not away from it
    assert abs(H0[0, 1]) < 1e-12
    assert abs(H1[0, 1]) > 1e-3


def test_quadratic_cost_rejects_asymmetric_own_block():
    with pytest.raises(InputError):
        QuadraticCost(
            agent=0,
            dims=[2],
            row_block=np.array([[1.0, 0.3], [0.0, 1.0]]),
            c=np.zeros(2),
        )


def test_monotonicity_classification():
    assert check_monotonicity(np.eye(2)).classification == "PD"
    assert check_monotonicity(np.array([[1.0, -1.0], [-1.0, 1.0]])).classification == "PSD"
    assert check_monotonicity(np.array([[1.0, -3.0], [1.0, 0.0]])).classification == "Indefinite"


def test_semicopositivity_certified_violation_has_witness():
    # -I is violated on the whole positive orthant
    cone = orthant_cone(["+", "+"], strict=False)
    verdict = check_strict_semicopositivity(-np.eye(2), cone, n_samples=1000, seed=0)
    assert verdict.label == "Certified-violated"
    w = verdict.witness
    assert w is not None and np.all(w >= -1e-12) and np.linalg.norm(w) > 0


def test_semicopositivity_identity_clean():
    cone = orthant_cone(["+", "+"], strict=True)
    verdict = check_strict_semicopositivity(np.eye(2), cone, n_samples=1000, seed=0)
    assert verdict.label == "No-violation-found"


def test_critical_cone_active_bounds():
    g = nonmonotone_semicopositive_game()
    # at the origin both nonnegativity bounds are active
    cone = critical_cone(g, np.zeros(2))
    assert cone.blocks[0].dim + cone.blocks[1].dim == 2


def test_callable_cost_roundtrip():
    def value(a):
        return 0.5 * a[0] ** 2 + a[0] * a[1]

    def grad(a):
        return np.array([a[0] + a[1]])

    def hess(a, j):
        return np.array([[1.0]]) if j == 0 else np.array([[1.0]])

    c = CallableCost(value=value, grad=grad, hess=hess)
    a = np.array([1.0, 2.0])
    assert np.isclose(c.value(a), 2.5)
    assert np.allclose(c.grad(a), [3.0])


def test_game_problem_checks_dimensions():
    g = standard_quadratic_game()
    with pytest.raises(InputError):
        g.check_point(np.zeros(3))
