"""Game definitions, pseudogradients, game Hessians, and matrix-cone checks."""

from dataclasses import dataclass, field
from itertools import product

import numpy as np

from .errors import CapabilityError, InputError
from .sets import Box, Polyhedron

ACTIVE_SET_TOL = 1e-8


class CallableCost:
    """Per-agent cost oracle backed by user-supplied closed-form derivatives.

    value(a) -> scalar; grad(a) -> own-block gradient (length n_i);
    hess(a, j) -> cross Hessian block d^2 J_i / (d a_i d a_j), shape n_i x n_j.
    """

    def __init__(self, value, grad, hess=None):
        self._value = value
        self._grad = grad
        self._hess = hess

    def value(self, a):
        return float(self._value(a))

    def grad(self, a):
        return np.asarray(self._grad(a), dtype=float)

    def hess(self, a, j):
        if self._hess is None:
            raise CapabilityError("cost oracle has no Hessian blocks")
        return np.atleast_2d(np.asarray(self._hess(a, j), dtype=float))


class QuadraticCost:
    """J_i = 1/2 a_i^T Q_ii a_i + a_i^T sum_{j != i} Q_ij a_j + c_i^T a_i.

    `row_block` stacks [Q_i1 ... Q_iN] as an n_i x n matrix; Q_ii must be
    symmetric.
    """

    def __init__(self, agent, dims, row_block, c):
        self.agent = agent
        self.dims = list(dims)
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])
        self.row_block = np.atleast_2d(np.asarray(row_block, dtype=float))
        self.c = np.atleast_1d(np.asarray(c, dtype=float))
        own = self._block(agent)
        if not np.allclose(own, own.T, atol=1e-12):
            raise InputError("own quadratic block Q_ii must be symmetric")

    def _block(self, j):
        return self.row_block[:, self.offsets[j] : self.offsets[j + 1]]

    def value(self, a):
        i = self.agent
        ai = a[self.offsets[i] : self.offsets[i + 1]]
        total = 0.5 * ai @ self._block(i) @ ai + self.c @ ai
        for j in range(len(self.dims)):
            if j == i:
                continue
            aj = a[self.offsets[j] : self.offsets[j + 1]]
            total += ai @ self._block(j) @ aj
        return float(total)

    def grad(self, a):
        return self.row_block @ np.asarray(a, dtype=float) + self.c

    def hess(self, a, j):
        return self._block(j).copy()


class LinearConstraint:
    """Per-agent constraint g(a) = G a - h <= 0 on the joint decision vector."""

    def __init__(self, G, h):
        self.G = np.atleast_2d(np.asarray(G, dtype=float))
        self.h = np.atleast_1d(np.asarray(h, dtype=float))
        if self.G.shape[0] != self.h.size:
            raise InputError("constraint G rows and h length differ")

    @property
    def m(self):
        return self.G.shape[0]

    @property
    def is_linear(self):
        return True

    def g(self, a):
        return self.G @ np.asarray(a, dtype=float) - self.h

    def jac(self, a):
        return self.G.copy()

    def lagrangian_hessian(self, a, lam):
        n = self.G.shape[1]
        return np.zeros((n, n))


class CallableConstraint:
    """General smooth constraint oracle: g(a) <= 0 with user derivatives."""

    def __init__(self, m, g, jac, lagrangian_hessian=None):
        self.m = m
        self._g = g
        self._jac = jac
        self._lh = lagrangian_hessian

    @property
    def is_linear(self):
        return False

    def g(self, a):
        return np.atleast_1d(np.asarray(self._g(a), dtype=float))

    def jac(self, a):
        return np.atleast_2d(np.asarray(self._jac(a), dtype=float))

    def lagrangian_hessian(self, a, lam):
        if self._lh is None:
            raise CapabilityError("constraint oracle has no second derivatives")
        return np.asarray(self._lh(a, lam), dtype=float)


@dataclass
class GameProblem:
    """N-agent game: per-agent cost oracles plus feasible-set descriptors.

    NE form carries `feasible` (fixed per-agent sets); GNE form carries
    `constraints` (per-agent inequality functions of the joint decision).
    """

    dims: list
    costs: list
    feasible: list = None
    constraints: list = None

    def __post_init__(self):
        self.dims = [int(d) for d in self.dims]
        if len(self.costs) != self.n_agents:
            raise InputError("one cost oracle per agent required")
        self.offsets = np.concatenate([[0], np.cumsum(self.dims)])

    @property
    def n_agents(self):
        return len(self.dims)

    @property
    def n(self):
        return int(sum(self.dims))

    @property
    def m(self):
        if self.constraints is None:
            return 0
        return int(sum(c.m for c in self.constraints))

    def block(self, x, i):
        return np.asarray(x)[self.offsets[i] : self.offsets[i + 1]]

    def slice(self, i):
        return slice(int(self.offsets[i]), int(self.offsets[i + 1]))

    def check_point(self, a):
        a = np.asarray(a, dtype=float)
        if a.shape != (self.n,):
            raise InputError(f"expected decision vector of dim {self.n}, got {a.shape}")
        return a


def pseudogradient(game, a):
    """Stack of each agent's own-gradient, in agent order."""
    a = game.check_point(a)
    return np.concatenate([game.costs[i].grad(a) for i in range(game.n_agents)])


@dataclass
class GameHessian:
    """Block matrix H_ij = d^2 J_i / (d a_i d a_j); generally non-symmetric."""

    blocks: list
    assembled: np.ndarray


def game_hessian(game, a):
    a = game.check_point(a)
    rows = []
    blocks = []
    for i in range(game.n_agents):
        brow = [game.costs[i].hess(a, j) for j in range(game.n_agents)]
        for j, blk in enumerate(brow):
            if blk.shape != (game.dims[i], game.dims[j]):
                raise InputError(
                    f"Hessian block ({i},{j}) has shape {blk.shape}, "
                    f"expected {(game.dims[i], game.dims[j])}"
                )
        blocks.append(brow)
        rows.append(np.hstack(brow))
    return GameHessian(blocks=blocks, assembled=np.vstack(rows))


# ---------------------------------------------------------------------------
# Critical cones


@dataclass(frozen=True)
class ConeBlock:
    """One agent's polyhedral cone {d : rows @ d <= 0, eqs @ d = 0}.

    `signs` is set for box-derived cones: one of '+', '-', '0', 'f' per
    coordinate (nonneg / nonpos / pinned to zero / free).  `strict` marks an
    open cone whose sign-constrained coordinates must be nonzero (used for
    games defined on open orthants).
    """

    dim: int
    rows: np.ndarray
    eqs: np.ndarray
    signs: str = None
    strict: bool = False

    def contains(self, d, tol=1e-10):
        d = np.asarray(d, dtype=float)
        if self.rows.size and np.any(self.rows @ d > tol):
            return False
        if self.eqs.size and np.any(np.abs(self.eqs @ d) > tol):
            return False
        if self.strict and self.signs is not None:
            for k, s in enumerate(self.signs):
                if s == "+" and d[k] <= tol:
                    return False
                if s == "-" and d[k] >= -tol:
                    return False
        return True


@dataclass(frozen=True)
class CriticalCone:
    """Cartesian product of per-agent cone blocks."""

    blocks: tuple

    @property
    def dim(self):
        return sum(b.dim for b in self.blocks)

    def contains(self, d, tol=1e-10):
        d = np.asarray(d, dtype=float)
        off = 0
        for b in self.blocks:
            if not b.contains(d[off : off + b.dim], tol):
                return False
            off += b.dim
        return True


def orthant_cone(signs_per_agent, strict=False):
    """Build a CriticalCone from per-agent sign strings, e.g. ["+", "+"]."""
    blocks = []
    for signs in signs_per_agent:
        blocks.append(_block_from_signs(signs, strict=strict))
    return CriticalCone(blocks=tuple(blocks))


def _block_from_signs(signs, grad=None, strict=False):
    dim = len(signs)
    rows = []
    eye = np.eye(dim)
    for k, s in enumerate(signs):
        if s == "+":
            rows.append(-eye[k])
        elif s == "-":
            rows.append(eye[k])
        elif s == "0":
            rows.append(eye[k])
            rows.append(-eye[k])
        elif s != "f":
            raise InputError(f"unknown sign character {s!r}")
    rows = np.array(rows) if rows else np.zeros((0, dim))
    eqs = np.zeros((0, dim))
    if grad is not None and np.linalg.norm(grad) > 1e-12:
        eqs = np.atleast_2d(np.asarray(grad, dtype=float))
    return ConeBlock(dim=dim, rows=rows, eqs=eqs, signs=signs, strict=strict)


def critical_cone(game, a_star, tol_act=ACTIVE_SET_TOL):
    """Per-agent tangent cone at a_star intersected with grad-orthogonality."""
    a_star = game.check_point(a_star)
    if game.feasible is None:
        raise InputError("critical_cone requires fixed per-agent feasible sets")
    blocks = []
    for i in range(game.n_agents):
        ai = game.block(a_star, i)
        grad = game.costs[i].grad(a_star)
        fs = game.feasible[i]
        if isinstance(fs, Box):
            if np.any(ai < fs.lower - tol_act) or np.any(ai > fs.upper + tol_act):
                raise InputError(f"agent {i} point infeasible beyond tol_act")
            signs = []
            for k in range(fs.dim):
                at_lo = ai[k] <= fs.lower[k] + tol_act
                at_up = ai[k] >= fs.upper[k] - tol_act
                if at_lo and at_up:
                    signs.append("0")
                elif at_lo:
                    signs.append("+")
                elif at_up:
                    signs.append("-")
                else:
                    signs.append("f")
            blocks.append(_block_from_signs("".join(signs), grad=grad))
        elif isinstance(fs, Polyhedron):
            resid = fs.A @ ai - fs.b
            if np.any(resid > tol_act):
                raise InputError(f"agent {i} point infeasible beyond tol_act")
            active = np.abs(resid) <= tol_act
            rows = fs.A[active]
            eqs = np.zeros((0, fs.dim))
            if np.linalg.norm(grad) > 1e-12:
                eqs = np.atleast_2d(grad)
            blocks.append(ConeBlock(dim=fs.dim, rows=rows, eqs=eqs))
        else:
            raise CapabilityError(f"unsupported feasible set type {type(fs)!r}")
    return CriticalCone(blocks=tuple(blocks))


# ---------------------------------------------------------------------------
# Matrix-cone regularity checks


@dataclass
class SemicopositivityVerdict:
    violated: bool
    witness: np.ndarray = None
    n_sampled: int = 0
    n_enumerated: int = 0

    @property
    def label(self):
        return "Certified-violated" if self.violated else "No-violation-found"


def _blockwise_max_form(H, cone, C):
    """For each row c of C: max over nonzero agent blocks of c_i^T (H c)_i."""
    HC = C @ H.T
    n_rows = C.shape[0]
    best = np.full(n_rows, -np.inf)
    any_block = np.zeros(n_rows, dtype=bool)
    off = 0
    for b in cone.blocks:
        cb = C[:, off : off + b.dim]
        sb = np.sum(cb * HC[:, off : off + b.dim], axis=1)
        nz = np.linalg.norm(cb, axis=1) > 0
        best = np.where(nz, np.maximum(best, sb), best)
        any_block |= nz
        off += b.dim
    return best, any_block


def _sample_block(block, rng, n):
    """Draw n cone elements for one block (may return fewer for hard cones)."""
    d = block.dim
    if block.signs is not None and block.eqs.size == 0:
        X = rng.standard_normal((n, d))
        for k, s in enumerate(block.signs):
            if s == "+":
                X[:, k] = np.abs(X[:, k])
            elif s == "-":
                X[:, k] = -np.abs(X[:, k])
            elif s == "0":
                X[:, k] = 0.0
        return X
    # general case: sample in the nullspace of eqs, rejection-filter on rows
    if block.eqs.size:
        _, _, vt = np.linalg.svd(block.eqs)
        rank = np.linalg.matrix_rank(block.eqs)
        basis = vt[rank:].T  # d x (d - rank)
    else:
        basis = np.eye(d)
    if basis.shape[1] == 0:
        return np.zeros((1, d))
    out = []
    tries = 0
    while len(out) < n and tries < 50 * n:
        batch = rng.standard_normal((n, basis.shape[1])) @ basis.T
        tries += n
        if block.rows.size:
            ok = np.all(batch @ block.rows.T <= 1e-12, axis=1)
            batch = batch[ok]
        out.extend(batch)
    if not out:
        return np.zeros((1, d))
    return np.array(out[:n])


def _enumerate_orthant_reps(cone):
    """Exact sign-orthant representatives for box-derived product cones."""
    choices = []
    for b in cone.blocks:
        if b.signs is None or b.eqs.size:
            return None
        per_coord = []
        for s in b.signs:
            if s == "+":
                vals = (1.0,) if b.strict else (0.0, 1.0)
            elif s == "-":
                vals = (-1.0,) if b.strict else (0.0, -1.0)
            elif s == "0":
                vals = (0.0,)
            else:
                vals = (1.0, -1.0) if b.strict else (0.0, 1.0, -1.0)
            per_coord.append(vals)
        choices.extend(per_coord)
    reps = []
    for combo in product(*choices):
        v = np.array(combo)
        if np.any(v != 0.0):
            reps.append(v)
    return np.array(reps) if reps else None


def check_strict_semicopositivity(H, cone, n_samples=10000, seed=0):
    """Sampling (plus exact orthant enumeration in low dimension) test.

    Certified-violated with a witness if some nonzero cone element c has
    max_i c_i^T (H c)_i <= 0; otherwise No-violation-found (a sampling
    certificate, not a proof).
    """
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if not cone.blocks:
        raise InputError("cone has no blocks")
    if H.shape != (cone.dim, cone.dim):
        raise InputError("matrix dimension does not match cone dimension")
    rng = np.random.default_rng(seed)

    n_enum = 0
    if cone.dim <= 6:
        reps = _enumerate_orthant_reps(cone)
        if reps is not None:
            n_enum = len(reps)
            best, any_nz = _blockwise_max_form(H, cone, reps)
            bad = any_nz & (best <= 0.0)
            if np.any(bad):
                w = reps[np.argmax(bad)]
                return SemicopositivityVerdict(
                    violated=True, witness=w, n_enumerated=n_enum
                )

    blocks_samples = [_sample_block(b, rng, n_samples) for b in cone.blocks]
    n_eff = min(s.shape[0] for s in blocks_samples)
    C = np.hstack([s[:n_eff] for s in blocks_samples])
    norms = np.linalg.norm(C, axis=1)
    keep = norms > 0
    C = C[keep] / norms[keep, None]
    if C.size:
        best, any_nz = _blockwise_max_form(H, cone, C)
        bad = any_nz & (best <= 0.0)
        if np.any(bad):
            w = C[np.argmax(bad)]
            return SemicopositivityVerdict(
                violated=True, witness=w, n_sampled=len(C), n_enumerated=n_enum
            )
    return SemicopositivityVerdict(
        violated=False, n_sampled=len(C), n_enumerated=n_enum
    )


@dataclass
class MonotonicityVerdict:
    classification: str  # "PD" | "PSD" | "Indefinite"
    min_eigenvalue: float


def check_monotonicity(H, tol=1e-10):
    """Classify the symmetric part of H (monotone pseudogradient <=> PSD)."""
    H = np.atleast_2d(np.asarray(H, dtype=float))
    if not np.all(np.isfinite(H)):
        raise InputError("matrix has non-finite entries")
    sym = 0.5 * (H + H.T)
    eigs = np.linalg.eigvalsh(sym)
    lo = float(eigs.min())
    if lo > tol:
        cls = "PD"
    elif lo >= -tol:
        cls = "PSD"
    else:
        cls = "Indefinite"
    return MonotonicityVerdict(classification=cls, min_eigenvalue=lo)
