"""Built-in problem families and structured-text loaders.

The built-ins cover the regimes the test campaigns need: an indefinite
game Hessian whose critical-cone check is the interesting part, a rotation
type quadratic game with a wide convergence basin, a quartic game with a
genuinely quadratic local rate, shared- and own-constraint GNE instances
with known solutions, and a coupled linear-quadratic pursuit scenario.
"""

import numpy as np
import yaml

from .errors import InputError
from .games import (
    CallableCost,
    GameProblem,
    LinearConstraint,
    QuadraticCost,
)
from .mpc import AgentCost, AgentPlant, MpcScenario
from .sets import Box, Polyhedron, unbounded_box


def nonmonotone_semicopositive_game():
    """Two scalar agents on the nonnegative orthant with game Hessian
    [[1,-3],[1,0]]; the unique NE sits at the origin.

    grad_1 J_1 = a_1 - 3 a_2, grad_2 J_2 = a_1 (supported by
    J_2 = a_1 a_2, J_1 = a_1^2/2 - 3 a_1 a_2 up to symmetrization).
    """
    H = np.array([[1.0, -3.0], [1.0, 0.0]])
    costs = [
        QuadraticCost(0, [1, 1], H[0:1, :], [0.0]),
        QuadraticCost(1, [1, 1], H[1:2, :], [0.0]),
    ]
    feasible = [Box([0.0], [np.inf]), Box([0.0], [np.inf])]
    return GameProblem(dims=[1, 1], costs=costs, feasible=feasible)


def standard_quadratic_game(c=(-1.0, 0.5), box=20.0):
    """Two scalar agents, H = [[1, 0.1], [-0.1, 1]] (a scaled rotation)."""
    H = np.array([[1.0, 0.1], [-0.1, 1.0]])
    c = np.asarray(c, dtype=float)
    costs = [
        QuadraticCost(0, [1, 1], H[0:1, :], [c[0]]),
        QuadraticCost(1, [1, 1], H[1:2, :], [c[1]]),
    ]
    feasible = [Box([-box], [box]), Box([-box], [box])]
    return GameProblem(dims=[1, 1], costs=costs, feasible=feasible)


def random_quadratic_game(rng, n_agents=None, max_dim=4, box=10.0):
    """Diagonally dominant random quadratic game (unique NE, solvable basin)."""
    n_agents = n_agents or int(rng.integers(2, 4))
    dims = [int(rng.integers(1, max_dim + 1)) for _ in range(n_agents)]
    n = sum(dims)
    offsets = np.concatenate([[0], np.cumsum(dims)]).astype(int)
    costs = []
    for i in range(n_agents):
        row = 0.3 * rng.standard_normal((dims[i], n))
        own = row[:, offsets[i] : offsets[i + 1]]
        own[...] = 0.5 * (own + own.T) + (n + 1) * np.eye(dims[i])
        c = rng.standard_normal(dims[i])
        costs.append(QuadraticCost(i, dims, row, c))
    feasible = [Box(np.full(d, -box), np.full(d, box)) for d in dims]
    return GameProblem(dims=dims, costs=costs, feasible=feasible)


def quartic_game(shift=(0.3, -0.2), gamma=1.0, eps=0.5, beta=0.4, box=10.0):
    """Two scalar agents with a genuinely nonlinear pseudogradient.

    J_i = 1/2 (a_i - s_i)^2 + gamma/3 (a_i - s_i)^3 + eps/4 (a_i - s_i)^4
          + beta a_i (a_j - s_j)^3, so a* = shift and the cross-Hessian
    vanishes at the solution while the Newton rate stays quadratic.
    """
    s = np.asarray(shift, dtype=float)

    def make(i):
        j = 1 - i

        def value(a):
            di, dj = a[i] - s[i], a[j] - s[j]
            return (
                0.5 * di**2
                + gamma / 3.0 * di**3
                + eps / 4.0 * di**4
                + beta * a[i] * dj**3
            )

        def grad(a):
            di, dj = a[i] - s[i], a[j] - s[j]
            return np.array([di + gamma * di**2 + eps * di**3 + beta * dj**3])

        def hess(a, k):
            di, dj = a[i] - s[i], a[j] - s[j]
            if k == i:
                return np.array([[1.0 + 2.0 * gamma * di + 3.0 * eps * di**2]])
            return np.array([[3.0 * beta * dj**2]])

        return CallableCost(value, grad, hess)

    costs = [make(0), make(1)]
    feasible = [Box([-box], [box]), Box([-box], [box])]
    return GameProblem(dims=[1, 1], costs=costs, feasible=feasible)


def quartic_solution(shift=(0.3, -0.2)):
    return np.asarray(shift, dtype=float)


def shared_constraint_gne():
    """Two scalar agents, J_i = 1/2 a_i^2 - a_i, both registering a1+a2 <= 1.

    The symmetric KKT point is z* = (0.5, 0.5, 0.5, 0.5).
    """
    dims = [1, 1]
    eye = np.eye(2)
    costs = [
        QuadraticCost(0, dims, eye[0:1, :], [-1.0]),
        QuadraticCost(1, dims, eye[1:2, :], [-1.0]),
    ]
    G = np.array([[1.0, 1.0]])
    h = np.array([1.0])
    constraints = [LinearConstraint(G, h), LinearConstraint(G, h)]
    return GameProblem(dims=dims, costs=costs, constraints=constraints)


def shared_constraint_solution():
    return np.array([0.5, 0.5, 0.5, 0.5])


def own_constraint_gne(targets=(1.0, 1.5), bounds=(0.4, 0.9)):
    """Two scalar agents with distinct active own constraints a_i <= b_i.

    J_i = 1/2 a_i^2 - t_i a_i + 0.2 a_i a_j with t_i large enough that both
    bounds are active; the KKT point is quasi-regular.
    """
    dims = [1, 1]
    t = np.asarray(targets, dtype=float)
    b = np.asarray(bounds, dtype=float)
    H = np.array([[1.0, 0.2], [0.2, 1.0]])
    costs = [
        QuadraticCost(0, dims, H[0:1, :], [-t[0]]),
        QuadraticCost(1, dims, H[1:2, :], [-t[1]]),
    ]
    constraints = [
        LinearConstraint(np.array([[1.0, 0.0]]), np.array([b[0]])),
        LinearConstraint(np.array([[0.0, 1.0]]), np.array([b[1]])),
    ]
    return GameProblem(dims=dims, costs=costs, constraints=constraints)


def own_constraint_solution(targets=(1.0, 1.5), bounds=(0.4, 0.9)):
    """Analytic KKT point: both constraints active, positive multipliers."""
    t = np.asarray(targets, dtype=float)
    b = np.asarray(bounds, dtype=float)
    a = b.copy()
    lam = np.array(
        [t[0] - a[0] - 0.2 * a[1], t[1] - a[1] - 0.2 * a[0]]
    )
    if np.any(lam < 0):
        raise InputError("chosen targets leave a constraint inactive")
    return np.concatenate([a, lam])


def pursuit_scenario(T=5, K=5, t_end=40, e0=0.5, w0=2.5, w1=1.0, mode="ne"):
    """Two scalar plants: agent 0 chases agent 1, agent 1 drifts home while
    avoiding being caught.  Coupling is bidirectional and strong enough that
    the per-iteration Jacobi contraction factor is about 0.67, so the
    closed-loop tracking error responds visibly to the iteration budget."""
    plants = [
        AgentPlant(A=[[1.0]], B=[[1.0]]),
        AgentPlant(A=[[0.9]], B=[[1.0]]),
    ]
    # joint-state weights: (x0 - x1)^2 coupling both ways, plus own regulation.
    # All costs share a small uniform scale so Newton residuals can reach the
    # reference tolerance; the equilibrium and contraction factor are
    # invariant under that scaling.
    s = 0.02
    D = np.array([[1.0, -1.0], [-1.0, 1.0]])
    Q0 = s * (w0 * D + np.diag([0.1, 0.0]))
    Q1 = s * (w1 * D + np.diag([0.0, 1.0]))
    # a heavy control penalty slows the closed loop so the state keeps moving
    # (and keeps exciting the tracking error) over the whole horizon
    costs = [
        AgentCost(Q=Q0, R=[[6.0 * s]], P=2.0 * Q0),
        AgentCost(Q=Q1, R=[[6.0 * s]], P=2.0 * Q1),
    ]
    return MpcScenario(
        plants=plants,
        costs=costs,
        T=T,
        x0=np.array([2.0, -1.0]),
        K=K,
        t_end=t_end,
        e0=e0,
        mode=mode,
    )


# ---------------------------------------------------------------------------
# Structured-text loaders


def _load_doc(path):
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise InputError(f"{path}: expected a mapping at top level")
    return doc


def _parse_feasible(spec, dim):
    if spec is None:
        return unbounded_box(dim)
    if "box" in spec:
        lo = np.asarray(spec["box"].get("lower", [-np.inf] * dim), dtype=float)
        hi = np.asarray(spec["box"].get("upper", [np.inf] * dim), dtype=float)
        return Box(lo, hi)
    if "polyhedron" in spec:
        return Polyhedron(spec["polyhedron"]["A"], spec["polyhedron"]["b"])
    raise InputError("feasible set must be a box or a polyhedron")


def load_game_file(path):
    """Load a quadratic game (NE or GNE form) from a YAML document.

    Schema: agents: list of {dim, Q: row block n_i x n, c, feasible:
    {box: {lower, upper}} | {polyhedron: {A, b}}, constraints: {G, h}};
    shared_constraints: {G, h} applied to every agent.
    """
    doc = _load_doc(path)
    agents = doc.get("agents")
    if not agents:
        raise InputError(f"{path}: no agents declared")
    dims = [int(ag["dim"]) for ag in agents]
    n = sum(dims)
    costs = []
    feasible = []
    constraints = []
    any_cons = False
    shared = doc.get("shared_constraints")
    for i, ag in enumerate(agents):
        Q = np.atleast_2d(np.asarray(ag["Q"], dtype=float))
        c = np.atleast_1d(np.asarray(ag.get("c", np.zeros(dims[i])), dtype=float))
        if Q.shape != (dims[i], n):
            raise InputError(
                f"{path}: agent {i} Q block must be {dims[i]}x{n}, got {Q.shape}"
            )
        costs.append(QuadraticCost(i, dims, Q, c))
        feasible.append(_parse_feasible(ag.get("feasible"), dims[i]))
        rows = []
        rhs = []
        if "constraints" in ag:
            rows.append(np.atleast_2d(np.asarray(ag["constraints"]["G"], dtype=float)))
            rhs.append(np.atleast_1d(np.asarray(ag["constraints"]["h"], dtype=float)))
        if shared is not None:
            rows.append(np.atleast_2d(np.asarray(shared["G"], dtype=float)))
            rhs.append(np.atleast_1d(np.asarray(shared["h"], dtype=float)))
        if rows:
            any_cons = True
            constraints.append(LinearConstraint(np.vstack(rows), np.concatenate(rhs)))
        else:
            constraints.append(LinearConstraint(np.zeros((0, n)), np.zeros(0)))
    return GameProblem(
        dims=dims,
        costs=costs,
        feasible=feasible,
        constraints=constraints if any_cons else None,
    )


def load_scenario_file(path):
    """Load an MPC scenario from a YAML document.

    Schema: agents: list of {A, B, Q, R, P, q, p, input_bounds: {lower,
    upper}}; T; K (int) or K_list; t_end; e0; mode; x0; seed.
    """
    doc = _load_doc(path)
    agents = doc.get("agents")
    if not agents:
        raise InputError(f"{path}: no agents declared")
    plants = [AgentPlant(A=ag["A"], B=ag["B"]) for ag in agents]
    costs = []
    bounds = []
    for ag in agents:
        costs.append(
            AgentCost(
                Q=ag["Q"],
                R=ag["R"],
                P=ag.get("P", ag["Q"]),
                q=ag.get("q"),
                p=ag.get("p"),
            )
        )
        if "input_bounds" in ag:
            bounds.append(
                (
                    np.asarray(ag["input_bounds"]["lower"], dtype=float),
                    np.asarray(ag["input_bounds"]["upper"], dtype=float),
                )
            )
        else:
            bounds.append(None)
    k_list = doc.get("K_list")
    scenario = MpcScenario(
        plants=plants,
        costs=costs,
        T=int(doc.get("T", 5)),
        x0=np.asarray(doc["x0"], dtype=float),
        input_bounds=bounds,
        K=int(doc.get("K", k_list[0] if k_list else 5)),
        t_end=int(doc.get("t_end", 20)),
        e0=float(doc.get("e0", 0.0)),
        mode=doc.get("mode", "ne"),
    )
    return scenario, ([int(k) for k in k_list] if k_list else [scenario.K])
