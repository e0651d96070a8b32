import numpy as np
import pytest

from gamenewton import (
    NewtonConfig,
    PerturbationSpec,
    distributed_jn_mechanism1,
    distributed_jn_mechanism2,
    josephy_newton,
    perturbed_josephy_newton,
    quartic_game,
    quartic_solution,
    random_quadratic_game,
    standard_quadratic_game,
)
from gamenewton.errors import InputError


def test_config_validation():
    with pytest.raises(InputError):
        NewtonConfig(tol_outer=-1.0)
    with pytest.raises(InputError):
        NewtonConfig(max_outer=0)
    with pytest.raises(InputError):
        NewtonConfig(damping=0.0)


def test_one_step_on_quadratic_game():
    g = standard_quadratic_game()
    trace = josephy_newton(g, np.array([3.0, -2.0]), NewtonConfig())
    assert trace.status == "Converged"
    assert trace.n_steps == 1
    # solution of the unconstrained linear system (box inactive here)
    H = np.array([[1.0, 0.1], [-0.1, 1.0]])
    a_star = np.linalg.solve(H, np.array([1.0, -0.5]))
    assert np.allclose(trace.final, a_star, atol=1e-9)


def test_one_step_from_any_start_quadratic():
    rng = np.random.default_rng(11)
    g = random_quadratic_game(rng, n_agents=2)
    t1 = josephy_newton(g, rng.uniform(-5, 5, size=g.n), NewtonConfig())
    t2 = josephy_newton(g, rng.uniform(-5, 5, size=g.n), NewtonConfig())
    assert t1.n_steps == 1 and t2.n_steps == 1
    assert np.allclose(t1.final, t2.final, atol=1e-8)


def test_quartic_game_quadratic_tail():
    g = quartic_game()
    a_star = quartic_solution()
    cfg = NewtonConfig(tol_outer=1e-10, tol_inner=1e-13)
    trace = josephy_newton(g, a_star + 0.05, cfg, ref=a_star)
    assert trace.status == "Converged"
    errs = [e for e in trace.error_to_ref if e > 1e-10]
    # error should at least square every step once inside the basin
    for k in range(1, len(errs) - 1):
        assert errs[k + 1] <= 10.0 * errs[k] ** 2


def test_trace_records_are_consistent():
    g = standard_quadratic_game()
    trace = josephy_newton(g, np.array([1.0, 1.0]), NewtonConfig())
    assert len(trace.iterates) == trace.n_steps + 1
    assert len(trace.residuals) == trace.n_steps + 1
    assert len(trace.step_norms) == trace.n_steps
    assert trace.residuals[-1] <= 1e-10


def test_trace_csv_roundtrip(tmp_path):
    g = standard_quadratic_game()
    trace = josephy_newton(g, np.array([1.0, 1.0]), NewtonConfig())
    path = tmp_path / "trace.csv"
    trace.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "k,residual,step_norm,err_to_ref,pert_norm"
    assert len(lines) == trace.n_steps + 2


def test_perturbed_gradient_stays_near_solution():
    g = standard_quadratic_game()
    clean = josephy_newton(g, np.zeros(2), NewtonConfig())
    spec = PerturbationSpec(mode="additive_gradient", magnitude=1e-4, seed=0)
    noisy = perturbed_josephy_newton(g, np.zeros(2), NewtonConfig(max_outer=20), spec)
    # perturbation bounded -> ultimate error comparable to the magnitude
    assert np.linalg.norm(np.asarray(noisy.final) - np.asarray(clean.final)) < 1e-2


def test_perturbation_modes_draw_correct_shapes():
    spec = PerturbationSpec(mode="additive_gradient", magnitude=0.1, seed=3)
    rng = np.random.default_rng(3)
    v = spec.draw(rng, 4)
    assert v.shape == (4,) and np.linalg.norm(v) <= 0.1 + 1e-12


def test_fixed_vector_perturbation():
    spec = PerturbationSpec(
        mode="additive_gradient",
        magnitude=1.0,
        distribution="fixed_vector",
        vector=np.array([0.5, -0.5]),
    )
    rng = np.random.default_rng(0)
    v = spec.draw(rng, 2)
    # the draw rescales the direction to the requested magnitude
    assert np.isclose(np.linalg.norm(v), 1.0)
    assert np.isclose(v[0], -v[1])


def test_mechanism1_matches_centralized_fixed_point():
    g = standard_quadratic_game()
    central = josephy_newton(g, np.zeros(2), NewtonConfig())
    dist = distributed_jn_mechanism1(g, np.zeros(2), NewtonConfig(max_outer=100))
    assert dist.status == "Converged"
    assert np.allclose(dist.final, central.final, atol=1e-8)


def test_mechanism2_best_response_agrees():
    g = standard_quadratic_game()
    central = josephy_newton(g, np.zeros(2), NewtonConfig())
    for order in ("jacobi", "gauss_seidel"):
        dist = distributed_jn_mechanism2(
            g, np.zeros(2), NewtonConfig(max_outer=200), br_order=order
        )
        assert dist.status == "Converged"
        assert np.allclose(dist.final, central.final, atol=1e-7)


def test_rejects_wrong_dimension_start():
    g = standard_quadratic_game()
    with pytest.raises(InputError):
        josephy_newton(g, np.zeros(3), NewtonConfig())
