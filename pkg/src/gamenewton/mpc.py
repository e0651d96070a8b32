"""Constrained game-theoretic MPC: horizon game assembly, fixed-budget
time-distributed solving, and closed-loop tracking-error campaigns.

Each agent runs a linear plant x_i+ = A_i x_i + B_i u_i and pays a
linear-quadratic horizon cost on the joint state trajectory, so the
horizon problem is a quadratic game parameterized by the current state.
"""

from dataclasses import dataclass, field

import numpy as np

from .errors import CapabilityError, InputError, NonIsolated, NotConverged
from .games import GameProblem, LinearConstraint, QuadraticCost
from .josephy import NewtonConfig, distributed_jn_mechanism1, josephy_newton
from .kkt import (
    PrimalDualPoint,
    assemble_phi,
    distributed_semismooth_newton,
    init_multipliers,
    semismooth_newton,
)
from .sets import Box

SOLVERS = ("jn", "distributed_jn", "ssn", "distributed_ssn")


@dataclass
class AgentPlant:
    A: np.ndarray
    B: np.ndarray

    def __post_init__(self):
        self.A = np.atleast_2d(np.asarray(self.A, dtype=float))
        self.B = np.atleast_2d(np.asarray(self.B, dtype=float))
        if self.A.shape[0] != self.A.shape[1] or self.A.shape[0] != self.B.shape[0]:
            raise InputError("plant matrices have inconsistent shapes")

    @property
    def nx(self):
        return self.A.shape[0]

    @property
    def nu(self):
        return self.B.shape[1]


@dataclass
class AgentCost:
    """LQ horizon cost on the joint state: stage 1/2 x'Qx + q'x + 1/2 u'Ru,
    terminal 1/2 x'Px + p'x.  Q and P act on the stacked joint state, so
    off-diagonal blocks couple the agents."""

    Q: np.ndarray
    R: np.ndarray
    P: np.ndarray
    q: np.ndarray = None
    p: np.ndarray = None

    def __post_init__(self):
        self.Q = np.atleast_2d(np.asarray(self.Q, dtype=float))
        self.R = np.atleast_2d(np.asarray(self.R, dtype=float))
        self.P = np.atleast_2d(np.asarray(self.P, dtype=float))
        nx = self.Q.shape[0]
        self.q = np.zeros(nx) if self.q is None else np.asarray(self.q, dtype=float)
        self.p = np.zeros(nx) if self.p is None else np.asarray(self.p, dtype=float)
        for M in (self.Q, self.P):
            if not np.allclose(M, M.T, atol=1e-12):
                raise InputError("state weight matrices must be symmetric")


@dataclass
class MpcScenario:
    plants: list
    costs: list
    T: int
    x0: np.ndarray
    input_bounds: list = None  # per agent (lo, hi) arrays of length nu, or None
    K: int = 5
    t_end: int = 20
    e0: float = 0.0
    mode: str = "ne"  # "ne" (forward elimination) or "gne" (multiple shooting)

    def __post_init__(self):
        if self.T < 1:
            raise InputError("horizon T must be >= 1")
        if self.t_end < 1:
            raise InputError("t_end must be >= 1")
        if self.mode not in {"ne", "gne"}:
            raise InputError("mode must be 'ne' or 'gne'")
        self.x0 = np.asarray(self.x0, dtype=float)
        n_agents = len(self.plants)
        if len(self.costs) != n_agents:
            raise InputError("one cost per agent required")
        nx = sum(p.nx for p in self.plants)
        if self.x0.shape != (nx,):
            raise InputError(f"x0 must have dimension {nx}")
        for c in self.costs:
            if c.Q.shape != (nx, nx):
                raise InputError("state weights must act on the joint state")
        if self.input_bounds is None:
            self.input_bounds = [None] * n_agents

    @property
    def n_agents(self):
        return len(self.plants)

    @property
    def nx(self):
        return int(sum(p.nx for p in self.plants))

    def state_slice(self, i):
        off = int(sum(p.nx for p in self.plants[:i]))
        return slice(off, off + self.plants[i].nx)

    def step_plant(self, x, u_blocks):
        nxt = np.empty_like(x)
        for i, p in enumerate(self.plants):
            nxt[self.state_slice(i)] = p.A @ x[self.state_slice(i)] + p.B @ u_blocks[i]
        return nxt


@dataclass
class ParameterizedGame:
    """Horizon game at a fixed current state x."""

    game: GameProblem
    scenario: MpcScenario
    x: np.ndarray
    mode: str
    # ne mode: decision blocks are stacked horizon inputs mu_i(0..T-1)
    # gne mode: decision blocks are (xi_i(1..T), mu_i(0..T-1))

    def input0(self, v, i):
        """First-step input block of agent i extracted from the decision vector."""
        s = self.scenario
        if self.mode == "ne":
            off = self.game.offsets[i]
            return np.asarray(v)[off : off + s.plants[i].nu]
        off = self.game.offsets[i] + s.T * s.plants[i].nx
        return np.asarray(v)[off : off + s.plants[i].nu]


def _prediction_maps(s):
    """Forward-eliminated joint-state trajectory: xi(tau) = Phi(tau) x + Gamma(tau) mu.

    Returns (Gamma, D) with Gamma mapping the stacked decision (mu_1,...,mu_N)
    to the stacked trajectory (xi(1),...,xi(T)) and D mapping x the same way.
    """
    T, nx = s.T, s.nx
    dims_u = [p.nu * T for p in s.plants]
    off_u = np.concatenate([[0], np.cumsum(dims_u)]).astype(int)
    Gamma = np.zeros((T * nx, int(sum(dims_u))))
    D = np.zeros((T * nx, nx))
    # per-agent powers of A
    pows = []
    for p in s.plants:
        P = [np.eye(p.nx)]
        for _ in range(T):
            P.append(p.A @ P[-1])
        pows.append(P)
    for tau in range(1, T + 1):
        for i, p in enumerate(s.plants):
            sl = s.state_slice(i)
            D[(tau - 1) * nx + sl.start : (tau - 1) * nx + sl.stop, sl] = pows[i][tau]
            for step in range(tau):
                cols = off_u[i] + step * p.nu
                Gamma[
                    (tau - 1) * nx + sl.start : (tau - 1) * nx + sl.stop,
                    cols : cols + p.nu,
                ] = pows[i][tau - 1 - step] @ p.B
    return Gamma, D, dims_u


def _build_ne_game(s, x):
    Gamma, D, dims_u = _prediction_maps(s)
    T, nx = s.T, s.nx
    d = D @ x
    costs = []
    feasible = []
    for i, p in enumerate(s.plants):
        c = s.costs[i]
        W = np.kron(np.eye(T), c.Q)
        W[(T - 1) * nx :, (T - 1) * nx :] = c.P
        w = np.concatenate([np.tile(c.q, T - 1), c.p]) if T > 1 else c.p.copy()
        S = Gamma.T @ W @ Gamma
        lin = Gamma.T @ (W @ d + w)
        # own input effort
        off = int(np.concatenate([[0], np.cumsum(dims_u)])[i])
        Rbar = np.kron(np.eye(T), c.R)
        S[off : off + dims_u[i], off : off + dims_u[i]] += Rbar
        row_block = S[off : off + dims_u[i], :]
        costs.append(QuadraticCost(i, dims_u, row_block, lin[off : off + dims_u[i]]))
        if s.input_bounds[i] is None:
            lo = np.full(dims_u[i], -np.inf)
            hi = np.full(dims_u[i], np.inf)
        else:
            lo = np.tile(np.asarray(s.input_bounds[i][0], dtype=float), T)
            hi = np.tile(np.asarray(s.input_bounds[i][1], dtype=float), T)
        feasible.append(Box(lo, hi))
    game = GameProblem(dims=dims_u, costs=costs, feasible=feasible)
    return ParameterizedGame(game=game, scenario=s, x=x, mode="ne")


def _build_gne_game(s, x):
    """Multiple shooting: dynamics enter as paired linear inequalities."""
    T = s.T
    dims = [T * p.nx + T * p.nu for p in s.plants]
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    n = int(offsets[-1])
    nx = s.nx

    def traj_map(i):
        # selects xi_i(tau) from agent i's block; joint state xi(tau) gathers all agents
        p = s.plants[i]
        M = np.zeros((T * nx, n))
        for tau in range(T):
            M[
                tau * nx + s.state_slice(i).start : tau * nx + s.state_slice(i).stop,
                offsets[i] + tau * p.nx : offsets[i] + (tau + 1) * p.nx,
            ] = np.eye(p.nx)
        return M

    Xi = sum(traj_map(i) for i in range(s.n_agents))
    costs = []
    constraints = []
    for i, p in enumerate(s.plants):
        c = s.costs[i]
        W = np.kron(np.eye(T), c.Q)
        W[(T - 1) * nx :, (T - 1) * nx :] = c.P
        w = np.concatenate([np.tile(c.q, T - 1), c.p]) if T > 1 else c.p.copy()
        S = Xi.T @ W @ Xi
        lin = Xi.T @ w
        Rbar = np.kron(np.eye(T), c.R)
        u0 = offsets[i] + T * p.nx
        S[u0 : u0 + T * p.nu, u0 : u0 + T * p.nu] += Rbar
        row_block = S[offsets[i] : offsets[i + 1], :]
        costs.append(
            QuadraticCost(i, dims, row_block, lin[offsets[i] : offsets[i + 1]])
        )
        # dynamics xi(tau+1) = A xi(tau) + B mu(tau) as paired inequalities
        E = np.zeros((T * p.nx, n))
        h = np.zeros(T * p.nx)
        for tau in range(T):
            r = slice(tau * p.nx, (tau + 1) * p.nx)
            E[r, offsets[i] + tau * p.nx : offsets[i] + (tau + 1) * p.nx] = np.eye(p.nx)
            if tau == 0:
                h[r] = p.A @ x[s.state_slice(i)]
            else:
                E[r, offsets[i] + (tau - 1) * p.nx : offsets[i] + tau * p.nx] = -p.A
            E[r, u0 + tau * p.nu : u0 + (tau + 1) * p.nu] = -p.B
        G = np.vstack([E, -E])
        hh = np.concatenate([h, -h])
        if s.input_bounds[i] is not None:
            lo = np.tile(np.asarray(s.input_bounds[i][0], dtype=float), T)
            hi = np.tile(np.asarray(s.input_bounds[i][1], dtype=float), T)
            sel = np.zeros((T * p.nu, n))
            sel[:, u0 : u0 + T * p.nu] = np.eye(T * p.nu)
            finite_hi = np.isfinite(hi)
            finite_lo = np.isfinite(lo)
            G = np.vstack([G, sel[finite_hi], -sel[finite_lo]])
            hh = np.concatenate([hh, hi[finite_hi], -lo[finite_lo]])
        constraints.append(LinearConstraint(G, hh))
    game = GameProblem(dims=dims, costs=costs, constraints=constraints)
    return ParameterizedGame(game=game, scenario=s, x=x, mode="gne")


def build_parameterized_game(s, x):
    x = np.asarray(x, dtype=float)
    if x.shape != (s.nx,):
        raise InputError(f"state must have dimension {s.nx}")
    return _build_ne_game(s, x) if s.mode == "ne" else _build_gne_game(s, x)


def _solver_compatible(pg, solver):
    if solver not in SOLVERS:
        raise InputError(f"unknown solver {solver!r}")
    if pg.mode == "ne" and solver in {"ssn", "distributed_ssn"}:
        raise CapabilityError("KKT solvers require the multiple-shooting mode")
    if pg.mode == "gne" and solver in {"jn", "distributed_jn"}:
        raise CapabilityError("VI solvers require the forward-eliminated mode")


def _run_solver(pg, v, solver, cfg):
    if pg.mode == "ne":
        fn = josephy_newton if solver == "jn" else distributed_jn_mechanism1
        return fn(pg.game, v, cfg)
    n = pg.game.n
    z = PrimalDualPoint.from_vector(np.asarray(v, dtype=float), n)
    fn = semismooth_newton if solver == "ssn" else distributed_semismooth_newton
    return fn(pg.game, z, cfg)


def _residual(pg, v):
    if pg.mode == "ne":
        from .josephy import _vi_residual

        return _vi_residual(pg.game, np.asarray(v, dtype=float))
    z = PrimalDualPoint.from_vector(np.asarray(v, dtype=float), pg.game.n)
    return float(np.linalg.norm(assemble_phi(pg.game, z)))


def decision_dim(pg):
    return pg.game.n + (pg.game.m if pg.mode == "gne" else 0)


def tdo_step(pg, v_prev, K, solver="jn"):
    """Run exactly K solver iterations from the warm start, never fewer.

    Budget semantics: no early stopping even at a solution, so per-step cost
    is constant across the closed loop.
    """
    _solver_compatible(pg, solver)
    v_prev = np.asarray(v_prev, dtype=float)
    if v_prev.shape != (decision_dim(pg),):
        raise InputError("warm start has wrong dimension")
    if K == 0:
        return v_prev.copy(), _residual(pg, v_prev)
    # inner solves at machine precision so the tracking-error floor is set by
    # the outer budget K, not by subproblem tolerances
    cfg = NewtonConfig(tol_outer=0.0, max_outer=K, tol_inner=1e-13)
    trace = _run_solver(pg, v_prev, solver, cfg)
    return np.asarray(trace.final, dtype=float), trace.residuals[-1]


def reference_solution(pg, v_hint, tol=1e-12, max_iter=200, n_restarts=5, seed=0):
    """High-accuracy solve from the hint, with a randomized isolatedness probe."""
    solver = "jn" if pg.mode == "ne" else "ssn"
    # the outer natural-map residual bottoms out at the inner tolerance on
    # affine problems, so the inner solve must be tighter than the target
    cfg = NewtonConfig(tol_outer=tol, max_outer=max_iter, tol_inner=min(tol, 1e-13))
    v_hint = np.asarray(v_hint, dtype=float)
    trace = _run_solver(pg, v_hint, solver, cfg)
    if trace.status != "Converged":
        raise NotConverged(f"reference solve stopped with status {trace.status}")
    v_star = np.asarray(trace.final, dtype=float)
    rng = np.random.default_rng(seed)
    distinct = []
    for _ in range(n_restarts):
        start = v_star + 0.1 * rng.standard_normal(v_star.size)
        try:
            t = _run_solver(pg, start, solver, cfg)
        except Exception:  # noqa: BLE001 - a failed restart is not a witness
            continue
        if t.status == "Converged":
            cand = np.asarray(t.final, dtype=float)
            # equality dynamics enter as paired inequalities, so multipliers
            # are determined only up to a shift; isolatedness is a statement
            # about the primal decision
            na = pg.game.n
            if np.linalg.norm(cand[:na] - v_star[:na]) > 1e-6:
                distinct.append(cand)
    if distinct:
        raise NonIsolated([v_star] + distinct)
    return v_star


@dataclass
class ClosedLoopLog:
    K: int
    x: list = field(default_factory=list)
    u: list = field(default_factory=list)
    v: list = field(default_factory=list)
    v_star: list = field(default_factory=list)
    e: list = field(default_factory=list)
    dx: list = field(default_factory=list)
    residual: list = field(default_factory=list)

    @property
    def sup_e(self):
        return max(self.e) if self.e else 0.0

    def to_csv(self, path):
        import csv

        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["t", "x", "u", "e", "dx", "residual"])
            for t in range(len(self.e)):
                w.writerow(
                    [
                        t,
                        " ".join(repr(v) for v in self.x[t]),
                        " ".join(repr(v) for v in self.u[t]),
                        repr(self.e[t]),
                        repr(self.dx[t]),
                        repr(self.residual[t]),
                    ]
                )


def run_closed_loop(s, solver="jn", seed=0, K=None):
    """Fixed-budget receding-horizon loop with online reference tracking."""
    K = s.K if K is None else int(K)
    rng = np.random.default_rng(seed)
    x = np.asarray(s.x0, dtype=float).copy()
    pg = build_parameterized_game(s, x)
    v_ref0 = reference_solution(pg, np.zeros(decision_dim(pg)))
    v = v_ref0.copy()
    if s.e0 > 0:
        off = rng.standard_normal(v.size)
        v = v + s.e0 * off / np.linalg.norm(off)
    log = ClosedLoopLog(K=K)
    for _ in range(s.t_end):
        pg = build_parameterized_game(s, x)
        v, res = tdo_step(pg, v, K, solver)
        if not np.all(np.isfinite(v)):
            raise NotConverged("solver produced non-finite iterate; aborting loop")
        v_star = reference_solution(pg, v)
        u_blocks = [pg.input0(v, i) for i in range(s.n_agents)]
        x_next = s.step_plant(x, u_blocks)
        if not np.all(np.isfinite(x_next)):
            raise NotConverged("plant state diverged; aborting loop")
        log.x.append(x.copy())
        log.u.append(np.concatenate(u_blocks))
        log.v.append(v.copy())
        log.v_star.append(v_star.copy())
        log.e.append(float(np.linalg.norm(v - v_star)))
        log.dx.append(float(np.linalg.norm(x_next - x)))
        log.residual.append(float(res))
        x = x_next
    return log


@dataclass
class ContractionRow:
    K: int
    sup_e: float
    alpha: float
    theta: float
    n_points: int


def estimate_contraction(logs, min_points=20, slack=1.1, floor=1e-10):
    """Per-budget fit of e(t+1) <= alpha e(t) + theta dx(t) over closed-loop logs.

    Steps whose tracking error has collapsed to within `floor` of zero are
    excluded: below that level e(t) measures the accuracy of the reference
    solve, not the closed-loop dynamics.  Returns the fitted rows sorted by
    K plus flags for whether alpha and sup_e are nonincreasing in K.
    """
    from .errors import TooFewPoints
    from .fitting import dominating_fit, violation_fraction

    groups = {}
    for log in logs:
        groups.setdefault(log.K, []).append(log)
    rows = []
    for K in sorted(groups):
        blocks_X, blocks_y = [], []
        sup_e = 0.0
        for log in groups[K]:
            e = np.asarray(log.e, dtype=float)
            dx = np.asarray(log.dx, dtype=float)
            usable = (e[:-1] > floor) & (e[1:] > floor)
            blocks_X.append(np.column_stack([e[:-1][usable], dx[:-1][usable]]))
            blocks_y.append(e[1:][usable])
            sup_e = max(sup_e, log.sup_e)
        X = np.vstack(blocks_X)
        y = np.concatenate(blocks_y)
        if y.size < min_points:
            raise TooFewPoints(
                f"K={K}: only {y.size} usable steps, need {min_points}"
            )
        coef, _, _ = dominating_fit(X, y)
        if violation_fraction(X, y, coef, slack=slack) > 0:
            raise InputError("dominating fit violated its own bound")
        rows.append(
            ContractionRow(
                K=K,
                sup_e=sup_e,
                alpha=float(coef[0]),
                theta=float(coef[1]),
                n_points=int(y.size),
            )
        )
    alphas = [r.alpha for r in rows]
    sups = [r.sup_e for r in rows]
    return {
        "rows": rows,
        "alpha_nonincreasing": all(
            alphas[i + 1] <= alphas[i] + 1e-12 for i in range(len(alphas) - 1)
        ),
        "sup_e_nonincreasing": all(
            sups[i + 1] <= sups[i] + 1e-12 for i in range(len(sups) - 1)
        ),
    }
