"""Dense linear-solve helper with a regularized / least-squares fallback chain."""

import numpy as np

# Accept a solve only if the backward error is tiny relative to the RHS scale.
_BACKWARD_TOL = 1e-9
TIKHONOV = 1e-12


def solve_newton_system(J, rhs):
    """Solve J x = rhs for a Newton step.

    Tries plain LU first, then Tikhonov-regularized LU, then minimum-norm
    least squares.  The least-squares branch matters for structurally
    singular Jacobians (e.g. duplicated shared constraints): the minimum-norm
    solution discards the inconsistent residual component instead of
    amplifying it by 1/regularization.

    Returns (x, method) where method is one of "lu", "tikhonov", "lstsq".
    """
    J = np.asarray(J, dtype=float)
    rhs = np.asarray(rhs, dtype=float)
    tol = _BACKWARD_TOL * (1.0 + np.linalg.norm(rhs))

    try:
        x = np.linalg.solve(J, rhs)
        if np.all(np.isfinite(x)) and np.linalg.norm(J @ x - rhs) <= tol:
            return x, "lu"
    except np.linalg.LinAlgError:
        pass

    candidates = []
    try:
        x = np.linalg.solve(J + TIKHONOV * np.eye(J.shape[0]), rhs)
        if np.all(np.isfinite(x)):
            candidates.append((x, "tikhonov"))
    except np.linalg.LinAlgError:
        pass
    x, *_ = np.linalg.lstsq(J, rhs, rcond=None)
    if np.all(np.isfinite(x)):
        candidates.append((x, "lstsq"))
    if not candidates:
        raise np.linalg.LinAlgError("all fallbacks produced non-finite steps")
    # prefer the smaller backward error; on near-singular systems the
    # minimum-norm solution avoids amplifying rounding by 1/regularization
    candidates.sort(key=lambda c: np.linalg.norm(J @ c[0] - rhs))
    return candidates[0]
