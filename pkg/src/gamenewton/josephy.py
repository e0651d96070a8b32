"""Outer Newton iterations for NE problems via semi-linearized affine VIs.

Centralized, perturbed, and agent-distributed variants.  Each outer step
linearizes the pseudogradient at the current iterate and solves the
resulting affine VI over the (fixed) per-agent feasible sets.
"""

import csv
from dataclasses import dataclass, field

import numpy as np

from .affine_vi import AffineViProblem, natural_map_residual, solve_affine_vi
from .errors import Diverged, InnerSolveFailed, InputError, OuterCycleDetected
from .fitting import estimate_iss_constants, estimate_q_rate  # re-export  # noqa: F401
from .games import game_hessian, pseudogradient
from .sets import project_blockwise

_DIVERGE_FACTOR = 1e6


@dataclass
class NewtonConfig:
    tol_outer: float = 1e-10
    max_outer: int = 50
    tol_inner: float = 1e-10
    max_inner: int = 100
    damping: float = 1.0

    def __post_init__(self):
        if self.tol_outer < 0:
            raise InputError("tol_outer must be nonnegative")
        if self.max_outer < 1:
            raise InputError("max_outer must be >= 1")
        if not 0 < self.damping <= 1:
            raise InputError("damping must lie in (0, 1]")


@dataclass
class PerturbationSpec:
    """Disturbance injected into each outer iteration.

    mode: "none" | "additive_gradient" | "additive_hessian" |
    "residual_injection".  distribution: "uniform_ball" draws v uniformly in
    the ball of radius `magnitude`; "fixed_vector" replays `vector` scaled to
    norm `magnitude` every step.
    """

    mode: str = "none"
    magnitude: float = 0.0
    distribution: str = "uniform_ball"
    vector: np.ndarray = None
    seed: int = 0

    def __post_init__(self):
        if self.mode not in {"none", "additive_gradient", "additive_hessian", "residual_injection"}:
            raise InputError(f"unknown perturbation mode {self.mode!r}")
        if self.distribution not in {"uniform_ball", "fixed_vector"}:
            raise InputError(f"unknown distribution {self.distribution!r}")
        if not np.isfinite(self.magnitude) or self.magnitude < 0:
            raise InputError("perturbation magnitude must be finite and >= 0")

    def draw(self, rng, dim):
        if self.mode == "none" or self.magnitude == 0.0:
            return np.zeros(dim)
        if self.distribution == "fixed_vector":
            v = np.asarray(self.vector, dtype=float)
            if v.shape != (dim,):
                raise InputError("fixed perturbation vector has wrong dimension")
            nrm = np.linalg.norm(v)
            return v * (self.magnitude / nrm) if nrm > 0 else np.zeros(dim)
        u = rng.standard_normal(dim)
        u /= np.linalg.norm(u)
        r = self.magnitude * rng.uniform() ** (1.0 / dim)
        return r * u


@dataclass
class IterateTrace:
    """Per-iteration record of a Newton run."""

    iterates: list = field(default_factory=list)
    residuals: list = field(default_factory=list)
    step_norms: list = field(default_factory=list)
    perturbations: list = field(default_factory=list)
    error_to_ref: list = None
    status: str = "MaxIter"
    warnings: list = field(default_factory=list)
    branch_records: list = field(default_factory=list)

    @property
    def final(self):
        return self.iterates[-1]

    @property
    def n_steps(self):
        return len(self.step_norms)

    def attach_reference(self, ref):
        ref = np.asarray(ref, dtype=float)
        self.error_to_ref = [float(np.linalg.norm(x - ref)) for x in self.iterates]

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["k", "residual", "step_norm", "err_to_ref", "pert_norm"])
            for k in range(len(self.iterates)):
                step = repr(self.step_norms[k]) if k < len(self.step_norms) else "nan"
                err = (
                    repr(self.error_to_ref[k])
                    if self.error_to_ref is not None
                    else "nan"
                )
                pert = (
                    repr(float(np.linalg.norm(self.perturbations[k])))
                    if k < len(self.perturbations)
                    else "nan"
                )
                w.writerow([k, repr(self.residuals[k]), step, err, pert])


def josephy_newton_vi(F, H, sets, dims, a0, cfg=None):
    """Josephy-Newton on VI(A, F) given callables for F and its Jacobian H.

    `sets` may contain polyhedra, so the feasible region need not be a box
    product.  Returns (trace, duals) where duals are the multipliers of the
    final affine subproblem (None for pure box sets).
    """
    cfg = cfg or NewtonConfig()
    dims = list(dims)
    trace = IterateTrace()
    a = project_blockwise(sets, dims, np.asarray(a0, dtype=float))
    trace.iterates.append(a.copy())
    duals = None
    res0 = None

    def residual(x):
        return float(
            np.linalg.norm(x - project_blockwise(sets, dims, x - F(x)))
        )

    for k in range(cfg.max_outer):
        res = residual(a)
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        if res > _DIVERGE_FACTOR * max(res0, 1e-12):
            trace.status = "Diverged"
            raise Diverged(f"residual {res:.3e} exceeds guard at iteration {k}")
        M = np.asarray(H(a), dtype=float)
        q = F(a) - M @ a
        sub = AffineViProblem(M=M, q=q, sets=sets, dims=dims)
        sol = solve_affine_vi(sub, a, tol_inner=cfg.tol_inner, max_iter=cfg.max_inner)
        if sol.status == "Singular":
            raise InnerSolveFailed(k, "subproblem solver stalled")
        duals = sol.duals
        step = cfg.damping * (sol.a - a)
        a = a + step
        trace.iterates.append(a.copy())
        trace.step_norms.append(float(np.linalg.norm(step)))
        trace.perturbations.append(np.zeros(sum(dims)))
    else:
        trace.residuals.append(residual(a))
        trace.status = "MaxIter"
    return trace, duals


def _require_ne_form(game):
    if game.feasible is None:
        raise InputError("solver requires a NE-form game with fixed feasible sets")


def _prepare_start(game, a0, trace):
    a0 = game.check_point(np.asarray(a0, dtype=float))
    proj = project_blockwise(game.feasible, game.dims, a0)
    if np.linalg.norm(proj - a0) > 0:
        trace.warnings.append("start point projected onto the feasible set")
    return proj


def _vi_residual(game, a):
    return float(
        np.linalg.norm(
            a - project_blockwise(game.feasible, game.dims, a - pseudogradient(game, a))
        )
    )


def josephy_newton(game, a0, cfg=None, ref=None):
    """Centralized Josephy-Newton: linearize F at a^k, solve the affine VI."""
    return perturbed_josephy_newton(game, a0, cfg, PerturbationSpec(), ref=ref)


def perturbed_josephy_newton(game, a0, cfg=None, pert=None, ref=None):
    cfg = cfg or NewtonConfig()
    pert = pert or PerturbationSpec()
    _require_ne_form(game)
    trace = IterateTrace()
    a = _prepare_start(game, a0, trace)
    rng = np.random.default_rng(pert.seed)
    n = game.n
    trace.iterates.append(a.copy())
    res0 = None
    for k in range(cfg.max_outer):
        res = _vi_residual(game, a)
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        if res > _DIVERGE_FACTOR * max(res0, 1e-12):
            trace.status = "Diverged"
            raise Diverged(f"residual {res:.3e} exceeds guard at iteration {k}")

        F = pseudogradient(game, a)
        H = game_hessian(game, a).assembled
        v = pert.draw(rng, n * n if pert.mode == "additive_hessian" else n)
        if pert.mode == "additive_gradient":
            F = F + v
        elif pert.mode == "additive_hessian":
            H = H + v.reshape(n, n)
        q = F - H @ a
        if pert.mode == "residual_injection":
            q = q - v
        sub = AffineViProblem(M=H, q=q, sets=game.feasible, dims=game.dims)
        sol = solve_affine_vi(sub, a, tol_inner=cfg.tol_inner, max_iter=cfg.max_inner)
        if sol.status == "Singular":
            raise InnerSolveFailed(k, "subproblem solver stalled")
        step = cfg.damping * (sol.a - a)
        a = a + step
        trace.iterates.append(a.copy())
        trace.step_norms.append(float(np.linalg.norm(step)))
        trace.perturbations.append(v)
    else:
        trace.residuals.append(_vi_residual(game, a))
        trace.status = "MaxIter"
    if trace.status == "Converged" and len(trace.residuals) < len(trace.iterates):
        trace.residuals.append(_vi_residual(game, a))
    if ref is not None:
        trace.attach_reference(ref)
    return trace


def distributed_jn_mechanism1(game, a0, cfg=None, pert=None, ref=None):
    """Synchronous Jacobi round of per-agent own-block Josephy-Newton updates."""
    cfg = cfg or NewtonConfig()
    pert = pert or PerturbationSpec()
    _require_ne_form(game)
    trace = IterateTrace()
    a = _prepare_start(game, a0, trace)
    rng = np.random.default_rng(pert.seed)
    trace.iterates.append(a.copy())
    res0 = None
    for k in range(cfg.max_outer):
        res = _vi_residual(game, a)
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        if res > _DIVERGE_FACTOR * max(res0, 1e-12):
            trace.status = "Diverged"
            raise Diverged(f"residual {res:.3e} exceeds guard at iteration {k}")
        v = pert.draw(rng, game.n)
        new_blocks = []
        for i in range(game.n_agents):
            gi = game.costs[i].grad(a) + v[game.slice(i)]
            Mi = game.costs[i].hess(a, i)
            ai = game.block(a, i)
            sub = AffineViProblem(
                M=Mi, q=gi - Mi @ ai, sets=[game.feasible[i]], dims=[game.dims[i]]
            )
            try:
                sol = solve_affine_vi(sub, ai, tol_inner=cfg.tol_inner, max_iter=cfg.max_inner)
            except Exception as exc:  # noqa: BLE001 - re-raise with agent identity
                raise InnerSolveFailed(k, f"agent {i}: {exc}") from exc
            if sol.status == "Singular":
                raise InnerSolveFailed(k, f"agent {i}: subproblem stalled")
            new_blocks.append(sol.a)
        a_next = np.concatenate(new_blocks)
        step = cfg.damping * (a_next - a)
        a = a + step
        trace.iterates.append(a.copy())
        trace.step_norms.append(float(np.linalg.norm(step)))
        trace.perturbations.append(v)
    else:
        trace.residuals.append(_vi_residual(game, a))
        trace.status = "MaxIter"
    if trace.status == "Converged" and len(trace.residuals) < len(trace.iterates):
        trace.residuals.append(_vi_residual(game, a))
    if ref is not None:
        trace.attach_reference(ref)
    return trace


def distributed_jn_mechanism2(
    game, a0, cfg=None, br_order="jacobi", tol_br=1e-10, max_br=50
):
    """Best-response dynamics with an inner Josephy-Newton best-response solve."""
    cfg = cfg or NewtonConfig()
    _require_ne_form(game)
    if br_order not in {"jacobi", "gauss_seidel"}:
        raise InputError("br_order must be 'jacobi' or 'gauss_seidel'")
    trace = IterateTrace()
    a = _prepare_start(game, a0, trace)
    # precondition: nonsingular own-Hessian blocks at the start point
    for i in range(game.n_agents):
        Mi = game.costs[i].hess(a, i)
        if np.linalg.matrix_rank(Mi) < game.dims[i]:
            raise InputError(f"agent {i} own Hessian block is singular")
    trace.iterates.append(a.copy())
    history = [a.copy()]
    res0 = None
    for k in range(cfg.max_outer):
        res = _vi_residual(game, a)
        trace.residuals.append(res)
        if res0 is None:
            res0 = res
        if res <= cfg.tol_outer:
            trace.status = "Converged"
            break
        current = a.copy()
        new_blocks = [game.block(current, i).copy() for i in range(game.n_agents)]
        for i in range(game.n_agents):
            base = current.copy()
            if br_order == "gauss_seidel":
                off = 0
                for j in range(i):
                    base[game.slice(j)] = new_blocks[j]
            ai = base[game.slice(i)].copy()
            for _ in range(max_br):
                work = base.copy()
                work[game.slice(i)] = ai
                gi = game.costs[i].grad(work)
                Mi = game.costs[i].hess(work, i)
                sub = AffineViProblem(
                    M=Mi, q=gi - Mi @ ai, sets=[game.feasible[i]], dims=[game.dims[i]]
                )
                sol = solve_affine_vi(sub, ai, tol_inner=cfg.tol_inner, max_iter=cfg.max_inner)
                if sol.status == "Singular":
                    raise InnerSolveFailed(k, f"agent {i}: best-response stalled")
                block_res = np.linalg.norm(
                    ai
                    - game.feasible[i].project(ai - game.costs[i].grad(work))
                )
                if np.linalg.norm(sol.a - ai) == 0.0 and block_res <= tol_br:
                    break
                ai = sol.a
                work = base.copy()
                work[game.slice(i)] = ai
                block_res = np.linalg.norm(
                    ai - game.feasible[i].project(ai - game.costs[i].grad(work))
                )
                if block_res <= tol_br:
                    break
            new_blocks[i] = ai
        a = np.concatenate(new_blocks)
        trace.iterates.append(a.copy())
        trace.step_norms.append(float(np.linalg.norm(a - current)))
        trace.perturbations.append(np.zeros(game.n))
        for prev in history[:-1]:
            if np.linalg.norm(a - prev) <= 1e-12:
                raise OuterCycleDetected(f"outer iterate repeated at round {k}")
        history.append(a.copy())
    else:
        trace.residuals.append(_vi_residual(game, a))
        trace.status = "MaxIter"
    if trace.status == "Converged" and len(trace.residuals) < len(trace.iterates):
        trace.residuals.append(_vi_residual(game, a))
    return trace
