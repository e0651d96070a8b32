"""Affine variational inequality solver: find a in A with (a'-a)^T (q + M a) >= 0.

The inner engine is semismooth Newton on the componentwise natural map for
box sets, and on the KKT mixed complementarity system for polyhedral sets,
with a projection (extragradient) fallback when Newton stalls.
"""

from dataclasses import dataclass, field
from itertools import product as iter_product

import numpy as np

from .errors import InputError, MultipleSolutions, NoSolution
from .linalg import solve_newton_system
from .sets import Box, Polyhedron, project_blockwise

TOL_INNER_DEFAULT = 1e-10
MAX_ITER_DEFAULT = 100
_STALL_WINDOW = 10
_STALL_DECREASE = 1e-16


@dataclass
class AffineViProblem:
    """Data (M, q, per-block feasible sets) of an affine VI."""

    M: np.ndarray
    q: np.ndarray
    sets: list
    dims: list = None

    def __post_init__(self):
        self.M = np.atleast_2d(np.asarray(self.M, dtype=float))
        self.q = np.atleast_1d(np.asarray(self.q, dtype=float))
        if self.dims is None:
            self.dims = [s.dim for s in self.sets]
        n = int(sum(self.dims))
        if self.M.shape != (n, n) or self.q.shape != (n,):
            raise InputError("affine VI dimensions inconsistent")

    @property
    def n(self):
        return int(sum(self.dims))

    def all_boxes(self):
        return all(isinstance(s, Box) for s in self.sets)

    def stacked_box(self):
        lo = np.concatenate([s.lower for s in self.sets])
        up = np.concatenate([s.upper for s in self.sets])
        return lo, up

    def project(self, x):
        return project_blockwise(self.sets, self.dims, x)


@dataclass
class ViSolution:
    a: np.ndarray
    residual: float
    status: str  # "Converged" | "MaxIter" | "Singular"
    iterations: int = 0
    duals: np.ndarray = None


def natural_map_residual(p, a):
    """|| a - proj_A(a - (q + M a)) ||; zero exactly at VI solutions."""
    a = np.asarray(a, dtype=float)
    if not np.all(np.isfinite(a)):
        raise InputError("point has non-finite entries")
    return float(np.linalg.norm(a - p.project(a - (p.q + p.M @ a))))


def _solve_box(p, a0, tol, max_iter):
    lo, up = p.stacked_box()
    a = np.asarray(a0, dtype=float).copy()
    n = p.n
    step_scale = 1.0 / (1.0 + np.linalg.norm(p.M, 2))
    history = []
    newton_ok = True
    its = 0
    for it in range(max_iter):
        its = it
        w = a - (p.q + p.M @ a)
        proj = np.clip(w, lo, up)
        phi = a - proj
        res = float(np.linalg.norm(phi))
        history.append(res)
        if res <= tol:
            return ViSolution(a=a, residual=res, status="Converged", iterations=it)
        if len(history) > _STALL_WINDOW and (
            history[-_STALL_WINDOW - 1] - res < _STALL_DECREASE
        ):
            # a stall at the rounding floor of the residual evaluation is
            # convergence, not failure, even when tol asks for more
            floor = 1e3 * np.finfo(float).eps * (
                1.0 + np.linalg.norm(p.q) + np.linalg.norm(p.M @ a)
            )
            if res <= floor:
                return ViSolution(a=a, residual=res, status="Converged", iterations=it)
            if newton_ok:
                newton_ok = False  # switch to extragradient for the rest
                history = history[-1:]
            else:
                return ViSolution(a=a, residual=res, status="Singular", iterations=it)
        if newton_ok:
            # interior branch iff strictly between the bounds; ties take the
            # bound (projection-side) branch for a deterministic Jacobian.
            interior = (w > lo) & (w < up)
            J = np.eye(n)
            J[interior] = p.M[interior]
            try:
                d, _ = solve_newton_system(J, -phi)
            except np.linalg.LinAlgError:
                newton_ok = False
                continue
            a = a + d
        else:
            a = np.clip(a - step_scale * (p.q + p.M @ a), lo, up)
    w = a - (p.q + p.M @ a)
    res = float(np.linalg.norm(a - np.clip(w, lo, up)))
    status = "Converged" if res <= tol else "MaxIter"
    return ViSolution(a=a, residual=res, status=status, iterations=max_iter)


def _gather_rows(p):
    rows, rhs = [], []
    off = 0
    n = p.n
    for s, d in zip(p.sets, p.dims):
        A, b = s.halfspace_rows()
        if A.shape[0]:
            wide = np.zeros((A.shape[0], n))
            wide[:, off : off + d] = A
            rows.append(wide)
            rhs.append(b)
        off += d
    if rows:
        return np.vstack(rows), np.concatenate(rhs)
    return np.zeros((0, n)), np.zeros(0)


def _solve_kkt(p, a0, tol, max_iter):
    """Polyhedral (or mixed) sets: semismooth Newton on the KKT system."""
    A, b = _gather_rows(p)
    m = A.shape[0]
    n = p.n
    a = np.asarray(a0, dtype=float).copy()
    lam = np.zeros(m)
    its = 0
    for it in range(max_iter):
        its = it
        slack = b - A @ a
        top = p.q + p.M @ a + A.T @ lam
        bottom = np.minimum(slack, lam)
        phi = np.concatenate([top, bottom])
        nat = natural_map_residual(p, a)
        if nat <= tol:
            return ViSolution(
                a=a, residual=nat, status="Converged", iterations=it, duals=lam
            )
        J = np.zeros((n + m, n + m))
        J[:n, :n] = p.M
        J[:n, n:] = A.T
        for j in range(m):
            if slack[j] <= lam[j]:  # slack branch (ties take the g-side)
                J[n + j, :n] = -A[j]
            else:
                J[n + j, n + j] = 1.0
        try:
            d, _ = solve_newton_system(J, -phi)
        except np.linalg.LinAlgError:
            return ViSolution(
                a=a, residual=nat, status="Singular", iterations=it, duals=lam
            )
        a = a + d[:n]
        lam = lam + d[n:]
    nat = natural_map_residual(p, a)
    floor = 1e3 * np.finfo(float).eps * (
        1.0 + np.linalg.norm(p.q) + np.linalg.norm(p.M @ a)
    )
    status = "Converged" if nat <= max(tol, floor) else "MaxIter"
    return ViSolution(a=a, residual=nat, status=status, iterations=max_iter, duals=lam)


def solve_affine_vi(p, a0, tol_inner=TOL_INNER_DEFAULT, max_iter=MAX_ITER_DEFAULT):
    """Solve the affine VI; deterministic given identical inputs."""
    a0 = np.asarray(a0, dtype=float)
    if a0.shape != (p.n,):
        raise InputError(f"start point dimension {a0.shape} != {p.n}")
    if not np.all(np.isfinite(a0)):
        raise InputError("start point has non-finite entries")
    if p.all_boxes():
        return _solve_box(p, a0, tol_inner, max_iter)
    return _solve_kkt(p, a0, tol_inner, max_iter)


def enumerate_active_set_solution(p, tol=1e-9):
    """Brute-force oracle: every {at-lower, free, at-upper} bound pattern.

    Box sets only, total dimension <= 12.  Errors if no pattern is
    consistent or if several distinct solutions exist.
    """
    if not p.all_boxes():
        raise InputError("active-set enumeration requires box sets")
    n = p.n
    if n > 12:
        raise InputError("active-set enumeration limited to dimension <= 12")
    lo, up = p.stacked_box()
    solutions = []
    for pattern in iter_product((-1, 0, 1), repeat=n):
        pattern = np.array(pattern)
        if np.any((pattern == -1) & ~np.isfinite(lo)):
            continue
        if np.any((pattern == 1) & ~np.isfinite(up)):
            continue
        a = np.where(pattern == -1, lo, 0.0) + np.where(pattern == 1, up, 0.0)
        free = pattern == 0
        if np.any(free):
            Mff = p.M[np.ix_(free, free)]
            rhs = -(p.q[free] + p.M[np.ix_(free, ~free)] @ a[~free])
            try:
                af = np.linalg.solve(Mff, rhs)
            except np.linalg.LinAlgError:
                continue
            a[free] = af
        if np.any(a < lo - tol) or np.any(a > up + tol):
            continue
        w = p.q + p.M @ a
        ok = True
        for i in range(n):
            if pattern[i] == -1 and w[i] < -tol:
                ok = False
            elif pattern[i] == 1 and w[i] > tol:
                ok = False
            elif pattern[i] == 0 and abs(w[i]) > tol:
                ok = False
            if not ok:
                break
        if not ok:
            continue
        if not any(np.linalg.norm(a - s) <= 1e-7 * (1 + np.linalg.norm(s)) for s in solutions):
            solutions.append(a)
    if not solutions:
        raise NoSolution("no active-set pattern is consistent")
    if len(solutions) > 1:
        raise MultipleSolutions(solutions)
    a = solutions[0]
    return ViSolution(a=a, residual=natural_map_residual(p, a), status="Converged")
