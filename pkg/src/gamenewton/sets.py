"""Feasible-set descriptors (boxes and polyhedra) and Euclidean projections."""

from dataclasses import dataclass
from itertools import combinations

import numpy as np

from .errors import InputError

_FEAS_TOL = 1e-9


@dataclass(frozen=True)
class Box:
    """Axis-aligned box {x : lower <= x <= upper}; entries may be +-inf."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lo = np.atleast_1d(np.asarray(self.lower, dtype=float))
        up = np.atleast_1d(np.asarray(self.upper, dtype=float))
        object.__setattr__(self, "lower", lo)
        object.__setattr__(self, "upper", up)
        if lo.shape != up.shape:
            raise InputError("box bounds have mismatched shapes")
        if np.any(lo > up):
            raise InputError("box requires lower <= upper componentwise")

    @property
    def dim(self):
        return self.lower.size

    def project(self, x):
        return np.minimum(np.maximum(np.asarray(x, dtype=float), self.lower), self.upper)

    def contains(self, x, tol=_FEAS_TOL):
        x = np.asarray(x, dtype=float)
        return bool(np.all(x >= self.lower - tol) and np.all(x <= self.upper + tol))

    def halfspace_rows(self):
        """Finite bounds as rows (A, b) with A x <= b."""
        rows, rhs = [], []
        n = self.dim
        eye = np.eye(n)
        for i in range(n):
            if np.isfinite(self.lower[i]):
                rows.append(-eye[i])
                rhs.append(-self.lower[i])
            if np.isfinite(self.upper[i]):
                rows.append(eye[i])
                rhs.append(self.upper[i])
        if not rows:
            return np.zeros((0, n)), np.zeros(0)
        return np.array(rows), np.array(rhs)


def unbounded_box(dim):
    return Box(np.full(dim, -np.inf), np.full(dim, np.inf))


@dataclass(frozen=True)
class Polyhedron:
    """Polyhedron {x : A x <= b}."""

    A: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        A = np.atleast_2d(np.asarray(self.A, dtype=float))
        b = np.atleast_1d(np.asarray(self.b, dtype=float))
        object.__setattr__(self, "A", A)
        object.__setattr__(self, "b", b)
        if A.shape[0] != b.size:
            raise InputError("polyhedron A rows and b length differ")
        if not (np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise InputError("polyhedron rows must be finite")

    @property
    def dim(self):
        return self.A.shape[1]

    @property
    def n_rows(self):
        return self.A.shape[0]

    def contains(self, x, tol=_FEAS_TOL):
        return bool(np.all(self.A @ np.asarray(x, dtype=float) <= self.b + tol))

    def project(self, x):
        """Euclidean projection by active-set enumeration (small row counts)."""
        x = np.asarray(x, dtype=float)
        m = self.n_rows
        if m > 16:
            raise InputError("polyhedron projection limited to <= 16 rows")
        if self.contains(x, tol=0.0):
            return x.copy()
        scale = 1.0 + np.linalg.norm(x)
        best = None
        best_dist = np.inf
        for size in range(1, min(m, self.dim + 1) + 1):
            for subset in combinations(range(m), size):
                As = self.A[list(subset)]
                bs = self.b[list(subset)]
                # KKT of min 1/2||y-x||^2 s.t. As y = bs: y = x - As^T nu
                gram = As @ As.T
                nu, *_ = np.linalg.lstsq(gram, As @ x - bs, rcond=None)
                if np.any(nu < -_FEAS_TOL * scale):
                    continue
                y = x - As.T @ nu
                if not self.contains(y, tol=_FEAS_TOL * scale):
                    continue
                # verify the equality residual (lstsq may hide rank issues)
                if np.linalg.norm(As @ y - bs) > 1e-8 * scale:
                    continue
                d = np.linalg.norm(y - x)
                if d < best_dist - 1e-12:
                    best, best_dist = y, d
            if best is not None:
                return best
        if best is None:
            raise InputError("projection failed: polyhedron may be empty")
        return best

    def halfspace_rows(self):
        return self.A.copy(), self.b.copy()


def project_blockwise(sets, dims, x):
    """Project x onto the Cartesian product of per-block sets."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(x)
    off = 0
    for s, d in zip(sets, dims):
        out[off : off + d] = s.project(x[off : off + d])
        off += d
    return out
