import numpy as np

from gamenewton import (
    NewtonConfig,
    josephy_newton,
    oracle_registry,
    quartic_game,
    quartic_solution,
    shared_constraint_gne,
    shared_constraint_solution,
    standard_quadratic_game,
)
from gamenewton.kkt import PrimalDualPoint
from gamenewton.oracles import (
    fd_game_hessian_check,
    fd_gradient_check,
    fd_phi_jacobian_check,
    grid_vi_verify,
    projected_gradient_solve,
)


def test_fd_gradient_check_passes_on_builtins():
    rng = np.random.default_rng(0)
    for game in (standard_quadratic_game(), quartic_game()):
        for _ in range(5):
            ok, worst = fd_gradient_check(game, rng.uniform(-2, 2, size=game.n))
            assert ok, f"worst relative error {worst}"


def test_fd_hessian_check_passes_on_builtins():
    rng = np.random.default_rng(1)
    for game in (standard_quadratic_game(), quartic_game()):
        ok, worst = fd_game_hessian_check(game, rng.uniform(-2, 2, size=game.n))
        assert ok, f"worst relative error {worst}"


def test_fd_phi_jacobian_skips_kinks():
    g = shared_constraint_gne()
    # at the solution the complementarity terms tie exactly: must be skipped
    z = PrimalDualPoint(a=np.array([0.5, 0.5]), lam=np.array([0.0, 0.0]))
    ok, worst = fd_phi_jacobian_check(g, z)
    assert ok is None and worst is None
    # far from any kink the check runs and passes
    z = PrimalDualPoint(a=np.array([0.2, 0.1]), lam=np.array([0.3, 0.4]))
    ok, worst = fd_phi_jacobian_check(g, z)
    assert ok is True


def test_grid_verify_accepts_newton_solution():
    g = quartic_game()
    trace = josephy_newton(g, np.zeros(2), NewtonConfig())
    ok, _ = grid_vi_verify(g, np.asarray(trace.final))
    assert ok
    ok, witness = grid_vi_verify(g, np.asarray(trace.final) + 0.3)
    assert not ok and witness is not None


def test_projected_gradient_agrees_with_newton():
    g = standard_quadratic_game()
    trace = josephy_newton(g, np.zeros(2), NewtonConfig())
    a_pg = projected_gradient_solve(g, np.zeros(2), tol=1e-11)
    assert np.allclose(a_pg, trace.final, atol=1e-8)


def test_registry_lists_oracles_and_caches():
    reg = oracle_registry()
    assert len(reg.names()) >= 5
    M = np.eye(2)
    q = np.array([-1.0, 2.0])
    lo, hi = np.zeros(2), np.full(2, np.inf)
    s1 = reg.cached_active_set(M, q, lo, hi)
    s2 = reg.cached_active_set(M, q, lo, hi)
    assert s1 is s2
    assert np.allclose(s1.a, [1.0, 0.0])
