import numpy as np
import pytest

from gamenewton import (
    NewtonConfig,
    PerturbationSpec,
    assemble_phi,
    check_quasi_regularity,
    distributed_semismooth_newton,
    init_multipliers,
    limiting_jacobian,
    own_constraint_gne,
    own_constraint_solution,
    perturbed_semismooth_newton,
    semismooth_newton,
    shared_constraint_gne,
    shared_constraint_solution,
    vgne_reduce,
)
from gamenewton.errors import CapabilityError, ConstraintsNotCommon
from gamenewton.kkt import PrimalDualPoint


def _point(vec, n):
    vec = np.asarray(vec, dtype=float)
    return PrimalDualPoint(a=vec[:n], lam=vec[n:])


def test_phi_vanishes_at_known_solutions():
    for game, sol, n in [
        (shared_constraint_gne(), shared_constraint_solution(), 2),
        (own_constraint_gne(), own_constraint_solution(), 2),
    ]:
        z = _point(sol, n)
        assert np.linalg.norm(assemble_phi(game, z)) <= 1e-12


def test_phi_nonzero_off_solution():
    g = shared_constraint_gne()
    z = _point([0.3, 0.8, 0.1, 0.1], 2)
    assert np.linalg.norm(assemble_phi(g, z)) > 1e-3


def test_semismooth_newton_shared_constraint():
    g = shared_constraint_gne()
    z_star = np.asarray(shared_constraint_solution())
    z0 = _point(z_star + 0.05, 2)
    trace = semismooth_newton(g, z0, NewtonConfig(tol_outer=1e-10))
    assert trace.status == "Converged"
    assert trace.n_steps <= 6
    assert np.allclose(trace.final, z_star, atol=1e-9)


def test_semismooth_newton_own_constraints():
    g = own_constraint_gne()
    z_star = np.asarray(own_constraint_solution())
    z0 = _point(z_star + 0.08, 2)
    trace = semismooth_newton(g, z0, NewtonConfig(tol_outer=1e-10))
    assert trace.status == "Converged"
    assert np.allclose(trace.final, z_star, atol=1e-8)


def test_distributed_ssn_agrees_with_centralized():
    g = shared_constraint_gne()
    z_star = np.asarray(shared_constraint_solution())
    z0 = _point(z_star - 0.025, 2)
    # the shared constraint is corrected by both agents each sweep, so the
    # agent-wise iteration needs damping to avoid joint overshoot
    cfg = NewtonConfig(tol_outer=1e-10, max_outer=200, damping=0.5)
    trace = distributed_semismooth_newton(g, z0, cfg)
    assert trace.status == "Converged"
    assert np.allclose(trace.final, z_star, atol=1e-8)


def test_limiting_jacobian_tie_rules_differ_at_kink():
    g = shared_constraint_gne()
    # lambda = -g = 0: both complementarity branches are admissible
    z = _point([0.5, 0.5, 0.0, 0.0], 2)
    Jg = limiting_jacobian(g, z, tie_rule="prefer_g").matrix
    Jl = limiting_jacobian(g, z, tie_rule="prefer_lambda").matrix
    assert not np.allclose(Jg, Jl)


def test_quasi_regularity_nondegenerate_case():
    g = own_constraint_gne()
    z = _point(own_constraint_solution(), 2)
    verdict = check_quasi_regularity(g, z)
    assert verdict.label == "AllNonsingular"
    assert verdict.min_singular_value > 1e-3


def test_quasi_regularity_flags_singular_elements():
    # the shared-constraint equilibrium has a redundant multiplier split,
    # which makes every limiting Jacobian singular there
    g = shared_constraint_gne()
    z = _point(shared_constraint_solution(), 2)
    verdict = check_quasi_regularity(g, z)
    assert verdict.label == "FoundSingular"
    assert verdict.min_singular_value < 1e-10


def test_init_multipliers_nonnegative():
    g = shared_constraint_gne()
    z0 = init_multipliers(g, np.array([0.4, 0.4]))
    assert np.all(z0.lam >= 0)
    assert np.allclose(z0.a, [0.4, 0.4])


def test_perturbed_ssn_rejects_hessian_mode():
    g = shared_constraint_gne()
    z = _point(np.asarray(shared_constraint_solution()) + 0.01, 2)
    spec = PerturbationSpec(mode="additive_hessian", magnitude=1e-6, seed=0)
    with pytest.raises(CapabilityError):
        perturbed_semismooth_newton(g, z, NewtonConfig(), spec)


def test_perturbed_ssn_residual_injection_bounded_error():
    g = shared_constraint_gne()
    z_star = np.asarray(shared_constraint_solution())
    z = _point(z_star + 0.02, 2)
    spec = PerturbationSpec(mode="residual_injection", magnitude=1e-6, seed=1)
    trace = perturbed_semismooth_newton(g, z, NewtonConfig(max_outer=30, tol_outer=0.0), spec)
    assert np.linalg.norm(np.asarray(trace.final) - z_star) < 1e-4


def test_vgne_reduce_and_lift():
    g = shared_constraint_gne()
    red = vgne_reduce(g)
    trace, duals = red.solve(np.array([0.2, 0.2]), NewtonConfig())
    a = np.asarray(trace.final)
    z = red.lift(a, duals)
    assert np.linalg.norm(assemble_phi(g, z)) <= 1e-8


def test_vgne_reduce_requires_common_constraints():
    g = own_constraint_gne()
    with pytest.raises(ConstraintsNotCommon):
        vgne_reduce(g)
