import dataclasses

import numpy as np
import pytest

from gamenewton import pursuit_scenario, run_closed_loop
from gamenewton.errors import CapabilityError, InputError
from gamenewton.mpc import (
    build_parameterized_game,
    decision_dim,
    estimate_contraction,
    reference_solution,
    tdo_step,
)


def _ne_setup(T=3):
    s = pursuit_scenario(T=T, K=3, t_end=5, e0=0.1)
    pg = build_parameterized_game(s, s.x0)
    return s, pg


def test_ne_game_dimensions():
    s, pg = _ne_setup(T=4)
    # each agent decides an input sequence over the horizon
    assert pg.game.n == s.n_agents * 4 * 1
    assert decision_dim(pg) == pg.game.n


def test_reference_solution_is_equilibrium():
    s, pg = _ne_setup()
    ref = reference_solution(pg, np.zeros(decision_dim(pg)))
    _, res = tdo_step(pg, ref, 0)
    assert res <= 1e-10


def test_tdo_step_k0_is_identity():
    s, pg = _ne_setup()
    v = np.full(decision_dim(pg), 0.3)
    out, _ = tdo_step(pg, v, 0)
    assert np.array_equal(out, v)


def test_tdo_step_contracts_toward_reference():
    s, pg = _ne_setup()
    ref = reference_solution(pg, np.zeros(decision_dim(pg)))
    v0 = ref + 0.2
    errs = []
    for K in (1, 2, 4):
        vk, _ = tdo_step(pg, v0, K, solver="distributed_jn")
        errs.append(np.linalg.norm(vk - ref))
    assert errs[0] > errs[1] > errs[2]


def test_solver_mode_compatibility():
    s, pg = _ne_setup()
    v = np.zeros(decision_dim(pg))
    with pytest.raises(CapabilityError):
        tdo_step(pg, v, 1, solver="ssn")
    with pytest.raises(InputError):
        tdo_step(pg, v, 1, solver="unknown")
    with pytest.raises(InputError):
        tdo_step(pg, np.zeros(3), 1)


def test_gne_mode_solvers_reach_same_primal():
    s = pursuit_scenario(T=3, K=3, t_end=5, e0=0.1, mode="gne")
    pg = build_parameterized_game(s, s.x0)
    ref = reference_solution(pg, np.zeros(decision_dim(pg)), tol=1e-10)
    v0 = ref + 0.05
    n = pg.game.n
    v1, _ = tdo_step(pg, v0, 10, solver="ssn")
    v2, _ = tdo_step(pg, v0, 40, solver="distributed_ssn")
    assert np.linalg.norm(v1[:n] - ref[:n]) < 1e-8
    assert np.linalg.norm(v2[:n] - ref[:n]) < 1e-6


def test_closed_loop_log_shapes_and_csv(tmp_path):
    s = pursuit_scenario(T=3, K=3, t_end=6, e0=0.2)
    log = run_closed_loop(s, solver="distributed_jn", seed=0)
    assert len(log.e) == len(log.x) == len(log.residual) == 6
    assert log.sup_e == max(log.e)
    path = tmp_path / "loop.csv"
    log.to_csv(path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "t,x,u,e,dx,residual"
    assert len(lines) == 7


def test_larger_budget_tracks_tighter():
    s = pursuit_scenario(T=3, K=1, t_end=8, e0=0.3)
    sup = []
    for K in (1, 4, 30):
        log = run_closed_loop(s, solver="distributed_jn", seed=2, K=K)
        sup.append(log.sup_e)
    assert sup[0] >= sup[1] >= sup[2]
    assert sup[2] < 1e-6


def test_estimate_contraction_pools_paired_logs():
    s = pursuit_scenario(T=3, K=1, t_end=25, e0=0.3)
    still = dataclasses.replace(s, x0=np.zeros(s.nx))
    logs = []
    for K in (1, 2, 4):
        logs.append(run_closed_loop(s, solver="distributed_jn", seed=3, K=K))
        logs.append(run_closed_loop(still, solver="distributed_jn", seed=3, K=K))
    out = estimate_contraction(logs, min_points=10)
    rows = out["rows"]
    assert [r.K for r in rows] == [1, 2, 4]
    alphas = [r.alpha for r in rows]
    assert alphas[0] > alphas[1] > alphas[2]
    assert out["alpha_nonincreasing"] and out["sup_e_nonincreasing"]
