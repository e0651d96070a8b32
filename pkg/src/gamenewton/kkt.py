"""GNE machinery: stacked KKT systems, min-complementarity reformulation,
limiting Jacobians, semismooth Newton variants, quasi-regularity, and the
shared-constraint reduction to a plain VI."""

import itertools
from dataclasses import dataclass, field

import numpy as np

from .errors import (
    CapabilityError,
    ConstraintsNotCommon,
    Diverged,
    InputError,
    SingularJacobian,
)
from .games import game_hessian, pseudogradient
from .josephy import IterateTrace, NewtonConfig, PerturbationSpec, josephy_newton_vi
from .linalg import solve_newton_system
from .sets import Polyhedron, unbounded_box

TIE_TOL = 1e-12
_DIVERGE_FACTOR = 1e6


@dataclass
class PrimalDualPoint:
    """z = (a, lambda) with multipliers stacked per agent."""

    a: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        self.a = np.atleast_1d(np.asarray(self.a, dtype=float))
        self.lam = np.atleast_1d(np.asarray(self.lam, dtype=float)) if np.size(self.lam) else np.zeros(0)

    @property
    def z(self):
        return np.concatenate([self.a, self.lam])

    @classmethod
    def from_vector(cls, z, n):
        z = np.asarray(z, dtype=float)
        return cls(a=z[:n], lam=z[n:])


def _require_gne_form(game):
    if game.constraints is None:
        raise InputError("operation requires a GNE-form game with constraint oracles")
    if len(game.constraints) != game.n_agents:
        raise InputError("one constraint oracle per agent required")


def _lam_offsets(game):
    ms = [c.m for c in game.constraints]
    return np.concatenate([[0], np.cumsum(ms)]).astype(int), ms


def assemble_phi(game, z):
    """Concatenated per-agent stationarity plus min(-g, lambda) complementarity."""
    _require_gne_form(game)
    a, lam = z.a, z.lam
    if a.shape != (game.n,) or lam.shape != (game.m,):
        raise InputError("primal-dual point dimensions do not match the game")
    loff, _ = _lam_offsets(game)
    top = []
    bot = []
    for i in range(game.n_agents):
        li = lam[loff[i] : loff[i + 1]]
        gi = game.constraints[i].g(a)
        Ji = game.constraints[i].jac(a)[:, game.slice(i)]
        top.append(game.costs[i].grad(a) + Ji.T @ li)
        bot.append(np.minimum(-gi, li))
    return np.concatenate(top + bot)


@dataclass
class JacobianElement:
    matrix: np.ndarray
    branch_record: list  # per complementarity row: "g" or "lambda"


def limiting_jacobian(game, z, tie_rule="prefer_g", forced_branches=None):
    """One element of the limiting Jacobian of the KKT map at z.

    Complementarity row for constraint c: the -g branch (row -grad g_c over a)
    when -g_c < lambda_c, the lambda branch (unit row) when lambda_c < -g_c.
    Ties within 1e-12 follow tie_rule, or an explicit per-tied-row choice in
    `forced_branches`.
    """
    _require_gne_form(game)
    if tie_rule not in {"prefer_g", "prefer_lambda"}:
        raise InputError(f"unknown tie rule {tie_rule!r}")
    a, lam = z.a, z.lam
    n, m = game.n, game.m
    loff, _ = _lam_offsets(game)
    J = np.zeros((n + m, n + m))
    H = game_hessian(game, a).assembled
    branch_record = []
    forced = dict(forced_branches or {})
    row = n
    for i in range(game.n_agents):
        sl = game.slice(i)
        li = lam[loff[i] : loff[i + 1]]
        con = game.constraints[i]
        gi = con.g(a)
        Gi = con.jac(a)
        # stationarity rows for agent i
        J[sl, :n] = H[sl, :]
        if con.m:
            lh = np.asarray(con.lagrangian_hessian(a, li), dtype=float)
            if lh.shape == (n, n):
                J[sl, :n] += lh[sl, :]
            elif lh.shape == (game.dims[i], n):
                J[sl, :n] += lh
            else:
                raise InputError("lagrangian_hessian has unexpected shape")
            J[sl, n + loff[i] : n + loff[i + 1]] = Gi[:, sl].T
        # complementarity rows
        for c in range(con.m):
            diff = -gi[c] - li[c]
            if abs(diff) <= TIE_TOL:
                pick = forced.get(row - n, "g" if tie_rule == "prefer_g" else "lambda")
            elif diff < 0:
                pick = "g"
            else:
                pick = "lambda"
            if pick == "g":
                J[row, :n] = -Gi[c]
            else:
                J[row, n + (row - n)] = 1.0
            branch_record.append(pick)
            row += 1
    return JacobianElement(matrix=J, branch_record=branch_record)


def _tied_rows(game, z):
    loff, _ = _lam_offsets(game)
    tied = []
    idx = 0
    for i in range(game.n_agents):
        gi = game.constraints[i].g(z.a)
        li = z.lam[loff[i] : loff[i + 1]]
        for c in range(game.constraints[i].m):
            if abs(-gi[c] - li[c]) <= TIE_TOL:
                tied.append(idx)
            idx += 1
    return tied


def semismooth_newton(game, z0, cfg=None, tie_rule="prefer_g", ref=None):
    return perturbed_semismooth_newton(game, z0, cfg, PerturbationSpec(), tie_rule, ref)


def perturbed_semismooth_newton(
    game, z0, cfg=None, pert=None, tie_rule="prefer_g", ref=None
):
    """Newton on the min-complementarity KKT map, with optional residual noise.

    Solves JPhi(z^k) d = -Phi(z^k) + r^k each step.
    """
    cfg = cfg or NewtonConfig()
    pert = pert or PerturbationSpec()
    _require_gne_form(game)
    if pert.mode == "additive_hessian":
        raise CapabilityError("hessian perturbation is not defined for the KKT map")
    z = PrimalDualPoint(np.array(z0.a, dtype=float), np.array(z0.lam, dtype=float))
    rng = np.random.default_rng(pert.seed)
    dim = game.n + game.m
    trace = IterateTrace()
    trace.iterates.append(z.z.copy())
    res0 = None
    for k in range(cfg.max_outer):
        phi = assemble_phi(game, z)
        res = float(np.linalg.norm(phi))
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        if res > _DIVERGE_FACTOR * max(res0, 1e-12):
            trace.status = "Diverged"
            raise Diverged(f"KKT residual {res:.3e} exceeds guard at iteration {k}")
        elem = limiting_jacobian(game, z, tie_rule)
        r = pert.draw(rng, dim)
        try:
            d, _ = solve_newton_system(elem.matrix, -phi + r)
        except np.linalg.LinAlgError as exc:
            raise SingularJacobian(k) from exc
        znew = z.z + cfg.damping * d
        z = PrimalDualPoint.from_vector(znew, game.n)
        trace.iterates.append(z.z.copy())
        trace.step_norms.append(float(np.linalg.norm(cfg.damping * d)))
        trace.perturbations.append(r)
        trace.branch_records.append(elem.branch_record)
    else:
        trace.residuals.append(float(np.linalg.norm(assemble_phi(game, z))))
        trace.status = "MaxIter"
    if ref is not None:
        trace.attach_reference(ref)
    return trace


def distributed_semismooth_newton(game, z0, cfg=None, tie_rule="prefer_g", ref=None):
    """Synchronous Jacobi round: each agent inverts only its own KKT block.

    Agent i's residual block is evaluated at the full current z, but the
    Newton system uses only the square Jacobian with respect to (a_i, lam_i).
    """
    cfg = cfg or NewtonConfig()
    _require_gne_form(game)
    z = PrimalDualPoint(np.array(z0.a, dtype=float), np.array(z0.lam, dtype=float))
    loff, ms = _lam_offsets(game)
    n = game.n
    trace = IterateTrace()
    trace.iterates.append(z.z.copy())
    res0 = None
    for k in range(cfg.max_outer):
        phi = assemble_phi(game, z)
        res = float(np.linalg.norm(phi))
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        if res > _DIVERGE_FACTOR * max(res0, 1e-12):
            trace.status = "Diverged"
            raise Diverged(f"KKT residual {res:.3e} exceeds guard at iteration {k}")
        elem = limiting_jacobian(game, z, tie_rule)
        a_new = z.a.copy()
        lam_new = z.lam.copy()
        for i in range(game.n_agents):
            rows = np.r_[
                np.arange(game.offsets[i], game.offsets[i + 1]),
                n + np.arange(loff[i], loff[i + 1]),
            ]
            block = elem.matrix[np.ix_(rows, rows)]
            rhs = -phi[rows]
            try:
                d, _ = solve_newton_system(block, rhs)
            except np.linalg.LinAlgError as exc:
                raise SingularJacobian(k, agent=i) from exc
            a_new[game.slice(i)] += cfg.damping * d[: game.dims[i]]
            lam_new[loff[i] : loff[i + 1]] += cfg.damping * d[game.dims[i] :]
        step = np.concatenate([a_new, lam_new]) - z.z
        z = PrimalDualPoint(a_new, lam_new)
        trace.iterates.append(z.z.copy())
        trace.step_norms.append(float(np.linalg.norm(step)))
        trace.perturbations.append(np.zeros(n + game.m))
        trace.branch_records.append(elem.branch_record)
    else:
        trace.residuals.append(float(np.linalg.norm(assemble_phi(game, z))))
        trace.status = "MaxIter"
    if ref is not None:
        trace.attach_reference(ref)
    return trace


@dataclass
class QuasiRegularityVerdict:
    all_nonsingular: bool
    min_singular_value: float
    n_elements: int
    witness_branches: list = None
    sampled: bool = False
    warnings: list = field(default_factory=list)

    @property
    def label(self):
        return "AllNonsingular" if self.all_nonsingular else "FoundSingular"


def check_quasi_regularity(game, z_star, sv_tol=1e-10, max_ties=20, seed=0):
    """Enumerate limiting-Jacobian elements at z_star and test nonsingularity.

    Non-tied complementarity rows have a unique branch; tied rows contribute
    a factor of two each.  Beyond `max_ties` tied rows only a random subset
    of branch combinations is checked and the verdict is flagged as partial.
    """
    _require_gne_form(game)
    tied = _tied_rows(game, z_star)
    warnings = []
    sampled = False
    if len(tied) > max_ties:
        warnings.append(
            f"{len(tied)} tied rows exceed the cap of {max_ties}; "
            "verdict based on a sampled subset of branch combinations"
        )
        sampled = True
    if sampled or len(tied) > 12:
        if not sampled:
            warnings.append(
                "branch combinations sampled rather than fully enumerated"
            )
            sampled = True
        rng = np.random.default_rng(seed)
        combos = {tuple(rng.integers(0, 2, len(tied))) for _ in range(4096)}
        combos = [dict(zip(tied, ("g" if b else "lambda" for b in c))) for c in combos]
    else:
        combos = [
            dict(zip(tied, ("g" if b else "lambda" for b in bits)))
            for bits in itertools.product((0, 1), repeat=len(tied))
        ]
    min_sv = np.inf
    witness = None
    for forced in combos:
        elem = limiting_jacobian(game, z_star, "prefer_g", forced_branches=forced)
        sv = float(np.linalg.svd(elem.matrix, compute_uv=False).min())
        if sv < min_sv:
            min_sv = sv
            if sv <= sv_tol:
                witness = elem.branch_record
    return QuasiRegularityVerdict(
        all_nonsingular=min_sv > sv_tol,
        min_singular_value=min_sv,
        n_elements=len(combos),
        witness_branches=witness,
        sampled=sampled,
        warnings=warnings,
    )


def init_multipliers(game, a0):
    """Nonnegative least-squares dual start from the stationarity block."""
    _require_gne_form(game)
    a0 = game.check_point(a0)
    lam = []
    for i in range(game.n_agents):
        con = game.constraints[i]
        if con.m == 0:
            continue
        Ji = con.jac(a0)[:, game.slice(i)]
        gi = game.costs[i].grad(a0)
        li, *_ = np.linalg.lstsq(Ji.T, -gi, rcond=None)
        lam.append(np.maximum(li, 0.0))
    return PrimalDualPoint(a0, np.concatenate(lam) if lam else np.zeros(0))


@dataclass
class VgneReduction:
    """Shared-constraint game posed as VI(A, F) over the common feasible set."""

    game: object
    sets: list
    dims: list
    m_shared: int

    def solve(self, a0, cfg=None):
        F = lambda a: pseudogradient(self.game, a)  # noqa: E731
        H = lambda a: game_hessian(self.game, a).assembled  # noqa: E731
        return josephy_newton_vi(F, H, self.sets, self.dims, a0, cfg)

    def lift(self, a, lam_bar):
        """Duplicate the shared multiplier into every agent's dual block."""
        lam_bar = np.atleast_1d(np.asarray(lam_bar, dtype=float))
        if lam_bar.shape != (self.m_shared,):
            raise InputError("shared multiplier has wrong dimension")
        lam = np.concatenate([lam_bar] * self.game.n_agents) if self.m_shared else np.zeros(0)
        return PrimalDualPoint(np.asarray(a, dtype=float), lam)


def vgne_reduce(game, n_check_points=10, seed=0, dev_tol=1e-12):
    """Reduce a GNE with identical per-agent constraints to a plain VI.

    Verifies that all agents registered the same constraint function by
    evaluating each g_i at random points; only linear common constraints
    produce a solvable polyhedral feasible set.
    """
    _require_gne_form(game)
    rng = np.random.default_rng(seed)
    cons = game.constraints
    ms = {c.m for c in cons}
    if len(ms) != 1:
        raise ConstraintsNotCommon(np.inf)
    m_shared = ms.pop()
    if m_shared:
        max_dev = 0.0
        for _ in range(n_check_points):
            p = rng.standard_normal(game.n)
            vals = np.array([c.g(p) for c in cons])
            max_dev = max(max_dev, float(np.max(np.abs(vals - vals[0]))))
        if max_dev > dev_tol:
            raise ConstraintsNotCommon(max_dev)
    if m_shared == 0:
        return VgneReduction(
            game=game,
            sets=[unbounded_box(d) for d in game.dims],
            dims=list(game.dims),
            m_shared=0,
        )
    if not all(getattr(c, "is_linear", False) for c in cons):
        raise CapabilityError("shared-constraint reduction supports linear constraints only")
    G = cons[0].jac(np.zeros(game.n))
    h = -cons[0].g(np.zeros(game.n))
    return VgneReduction(
        game=game,
        sets=[Polyhedron(G, h)],
        dims=[game.n],
        m_shared=m_shared,
    )
