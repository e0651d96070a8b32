"""Brute-force cross-check oracles used by the test suite and report checks.

Each oracle is slow but independent of the solver code paths it validates:
finite differences for derivatives, dense grids for VI solutions, active-set
enumeration for affine VIs, and closed-form answers for the analytic GNE.
"""

import hashlib

import numpy as np

from .affine_vi import enumerate_active_set_solution
from .games import game_hessian, pseudogradient
from .kkt import PrimalDualPoint, assemble_phi, limiting_jacobian
from .sets import project_blockwise

_FD_STEP = 1e-6


def fd_gradient_check(game, a, tol=1e-4):
    """Compare each agent's gradient oracle to central differences of value."""
    a = np.asarray(a, dtype=float)
    worst = 0.0
    for i in range(game.n_agents):
        grad = game.costs[i].grad(a)
        sl = game.slice(i)
        fd = np.zeros(game.dims[i])
        for k in range(game.dims[i]):
            hi = a.copy()
            lo = a.copy()
            hi[sl.start + k] += _FD_STEP
            lo[sl.start + k] -= _FD_STEP
            fd[k] = (game.costs[i].value(hi) - game.costs[i].value(lo)) / (2 * _FD_STEP)
        scale = 1.0 + np.linalg.norm(grad)
        worst = max(worst, float(np.linalg.norm(grad - fd)) / scale)
    return worst <= tol, worst


def fd_game_hessian_check(game, a, tol=1e-4):
    """Compare game-Hessian blocks to central differences of own gradients."""
    a = np.asarray(a, dtype=float)
    H = game_hessian(game, a).assembled
    n = game.n
    fd = np.zeros((n, n))
    for j in range(n):
        hi = a.copy()
        lo = a.copy()
        hi[j] += _FD_STEP
        lo[j] -= _FD_STEP
        fd[:, j] = (pseudogradient(game, hi) - pseudogradient(game, lo)) / (2 * _FD_STEP)
    worst = float(np.max(np.abs(H - fd))) / (1.0 + float(np.max(np.abs(H))))
    return worst <= tol, worst


def fd_phi_jacobian_check(game, z, tol=1e-4, kink_guard=1e-5):
    """Compare the limiting Jacobian of the KKT map to finite differences.

    Only valid away from complementarity kinks; points within `kink_guard`
    of a kink are reported as skipped (None).
    """
    zv = z.z
    n = game.n
    # guard: skip points too close to a kink for one-sided consistency
    from .kkt import _lam_offsets

    loff, _ = _lam_offsets(game)
    for i in range(game.n_agents):
        gi = game.constraints[i].g(z.a)
        li = z.lam[loff[i] : loff[i + 1]]
        if np.any(np.abs(-gi - li) < kink_guard):
            return None, None
    J = limiting_jacobian(game, z).matrix
    dim = zv.size
    fd = np.zeros((dim, dim))
    for j in range(dim):
        hi = zv.copy()
        lo = zv.copy()
        hi[j] += _FD_STEP
        lo[j] -= _FD_STEP
        fd[:, j] = (
            assemble_phi(game, PrimalDualPoint.from_vector(hi, n))
            - assemble_phi(game, PrimalDualPoint.from_vector(lo, n))
        ) / (2 * _FD_STEP)
    worst = float(np.max(np.abs(J - fd))) / (1.0 + float(np.max(np.abs(J))))
    return worst <= tol, worst


def grid_vi_verify(game, a_candidate, radius=0.5, points=11, tol=1e-8):
    """Check no agent can improve by a unilateral grid move near the candidate.

    Scalar-block games only; each agent's cost is scanned on a grid of its
    own coordinate with the others frozen.
    """
    a = np.asarray(a_candidate, dtype=float)
    if any(d != 1 for d in game.dims):
        raise ValueError("grid verification supports scalar agent blocks only")
    base = [game.costs[i].value(a) for i in range(game.n_agents)]
    for i in range(game.n_agents):
        lo = max(a[i] - radius, game.feasible[i].lower[0])
        hi = min(a[i] + radius, game.feasible[i].upper[0])
        for cand in np.linspace(lo, hi, points):
            trial = a.copy()
            trial[i] = cand
            if game.costs[i].value(trial) < base[i] - tol:
                return False, (i, float(cand))
    return True, None


def projected_gradient_solve(game, a0, step=None, tol=1e-10, max_iter=200000):
    """Slow projected pseudogradient iteration; independent VI reference."""
    a = np.asarray(a0, dtype=float).copy()
    if step is None:
        H = game_hessian(game, a).assembled
        step = 1.0 / (1.0 + np.linalg.norm(H, 2))
    for _ in range(max_iter):
        nxt = project_blockwise(game.feasible, game.dims, a - step * pseudogradient(game, a))
        if np.linalg.norm(nxt - a) <= tol * step:
            return nxt
        a = nxt
    return a


def analytic_shared_gne():
    """Closed-form KKT point of the built-in shared-constraint example."""
    return np.array([0.5, 0.5, 0.5, 0.5])


def _problem_hash(*arrays):
    h = hashlib.sha256()
    for arr in arrays:
        arr = np.ascontiguousarray(np.asarray(arr, dtype=float))
        h.update(arr.shape.__repr__().encode())
        h.update(arr.tobytes())
    return h.hexdigest()


class OracleRegistry:
    """Catalog of cross-check oracles with result caching by problem hash."""

    def __init__(self):
        self._cache = {}
        self.oracles = {
            "fd_gradient_check": fd_gradient_check,
            "fd_game_hessian_check": fd_game_hessian_check,
            "fd_phi_jacobian_check": fd_phi_jacobian_check,
            "grid_vi_verify": grid_vi_verify,
            "active_set_enumeration": enumerate_active_set_solution,
            "projected_gradient_solve": projected_gradient_solve,
            "analytic_shared_gne": analytic_shared_gne,
        }

    def names(self):
        return sorted(self.oracles)

    def get(self, name):
        return self.oracles[name]

    def cached_active_set(self, M, q, lower, upper):
        """Active-set enumeration for box affine VIs, memoized on the data."""
        from .affine_vi import AffineViProblem
        from .sets import Box

        key = ("aset", _problem_hash(M, q, lower, upper))
        if key not in self._cache:
            p = AffineViProblem(
                M=np.asarray(M, dtype=float),
                q=np.asarray(q, dtype=float),
                sets=[Box(lower, upper)],
                dims=[np.asarray(q).size],
            )
            self._cache[key] = enumerate_active_set_solution(p)
        return self._cache[key]


_REGISTRY = None


def oracle_registry():
    global _REGISTRY
    if _REGISTRY is None:
        _REGISTRY = OracleRegistry()
    return _REGISTRY
