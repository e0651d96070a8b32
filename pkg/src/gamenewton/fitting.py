"""Least-squares fits of empirical contraction / gain bounds.

The reported constants must dominate every recorded transition (they
estimate an upper bound, not a mean response).  We first try plain
nonnegative least squares; if that already dominates the data we keep it
(exact-model recovery stays exact).  Otherwise we find minimal dominating
constants by linear programming and polish the active constraints.
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog, nnls

from .errors import DegenerateFit, TooFewPoints

_DOM_SLACK = 1e-9


def _dominates(X, y, coef):
    # multiplicative criterion, matching how violations are judged later;
    # the absolute term only absorbs floating-point noise near zero
    pred = X @ coef
    return np.all(y <= pred * (1.0 + _DOM_SLACK) + 1e-15)


def dominating_fit(X, y):
    """Fit nonnegative coef with X @ coef >= y, close to the data in LS sense.

    Returns (coef, rms_residual, method).
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    coef, _ = nnls(X, y)
    if _dominates(X, y, coef):
        return coef, _rms(X, y, coef), "nnls"
    # minimal dominating constants: min sum(X,0) @ c  s.t.  X c >= y, c >= 0.
    # Rows are rescaled to unit size so the LP feasibility tolerance does not
    # silently drop constraints whose data sit many orders below the largest.
    scale = np.maximum(np.max(np.abs(X), axis=1), np.abs(y))
    scale = np.where(scale > 0, scale, 1.0)
    Xs = X / scale[:, None]
    ys = y / scale
    res = linprog(
        c=Xs.sum(axis=0),
        A_ub=-Xs,
        b_ub=-ys,
        bounds=[(0, None)] * X.shape[1],
        method="highs",
    )
    if not res.success:
        raise DegenerateFit("dominating fit LP failed")
    coef = res.x
    # polish: re-solve exactly on the binding constraints
    pred = X @ coef
    active = (pred - y) <= 1e-7 * (np.abs(pred) + np.abs(y) + 1e-300)
    if np.count_nonzero(active) >= X.shape[1]:
        cand, *_ = np.linalg.lstsq(X[active], y[active], rcond=None)
        if np.all(cand >= -1e-12) and _dominates(X, y, np.maximum(cand, 0.0)):
            coef = np.maximum(cand, 0.0)
    return coef, _rms(X, y, coef), "lp"


def _rms(X, y, coef):
    r = X @ coef - y
    return float(np.sqrt(np.mean(r * r)))


def violation_fraction(X, y, coef, slack=1.1):
    """Fraction of rows with y > slack * (X @ coef)."""
    pred = X @ coef
    viol = y > slack * pred + 1e-15
    return float(np.mean(viol))


@dataclass
class IssFit:
    """Fitted gain constants of a perturbed-iteration error bound.

    Linear model  e+ <= l_state * e + l_noise * ||v||  and quadratic model
    e+ <= l_state_quad * e^2 + l_noise_quad * ||v||.
    """

    l_state: float
    l_noise: float
    l_state_quad: float
    l_noise_quad: float
    fit_residual: float
    violations: float
    violations_quad: float
    n_triples: int


def estimate_iss_constants(traces, min_triples=30, slack=1.1):
    """Fit gain constants from (e_k, e_{k+1}, ||v_k||) triples of traces."""
    es, eps, vs = [], [], []
    for tr in traces:
        if tr.error_to_ref is None:
            raise TooFewPoints("trace lacks error_to_ref")
        errs = tr.error_to_ref
        for k in range(len(tr.perturbations)):
            if k + 1 >= len(errs):
                break
            es.append(errs[k])
            eps.append(errs[k + 1])
            vs.append(float(np.linalg.norm(tr.perturbations[k])))
    es, eps, vs = np.array(es), np.array(eps), np.array(vs)
    if es.size < min_triples:
        raise TooFewPoints(f"need >= {min_triples} triples, have {es.size}")
    if np.all(vs == 0.0):
        raise DegenerateFit("all recorded perturbations are zero")
    X_lin = np.column_stack([es, vs])
    X_quad = np.column_stack([es * es, vs])
    coef_l, rms, _ = dominating_fit(X_lin, eps)
    coef_q, _, _ = dominating_fit(X_quad, eps)
    return IssFit(
        l_state=float(coef_l[0]),
        l_noise=float(coef_l[1]),
        l_state_quad=float(coef_q[0]),
        l_noise_quad=float(coef_q[1]),
        fit_residual=rms,
        violations=violation_fraction(X_lin, eps, coef_l, slack),
        violations_quad=violation_fraction(X_quad, eps, coef_q, slack),
        n_triples=int(es.size),
    )


@dataclass
class QRateEstimate:
    ratios: list
    classification: str  # Quadratic | Superlinear | Linear | Inconclusive


def estimate_q_rate(trace, floor=1e-13):
    """Classify the convergence rate of a trace's error-to-reference sequence."""
    if trace.error_to_ref is None:
        raise TooFewPoints("trace lacks error_to_ref")
    errs = np.array([e for e in trace.error_to_ref if e > floor])
    # Iterations past convergence just bounce around the rounding floor and
    # produce meaningless ratios, so keep only the strictly decreasing prefix.
    cut = errs.size
    for k in range(1, errs.size):
        if errs[k] >= errs[k - 1]:
            cut = k
            break
    errs = errs[:cut]
    if errs.size < 4:
        raise TooFewPoints("need >= 4 error entries above the floor")
    rhos = errs[1:] / errs[:-1]
    ratios = errs[1:] / errs[:-1] ** 2
    decreasing = rhos[-1] <= 0.2 * rhos[0]
    bounded_quad = np.max(ratios) < 1e6
    if decreasing and bounded_quad:
        cls = "Quadratic"
    elif decreasing:
        cls = "Superlinear"
    elif rhos.size >= 2 and np.std(rhos) <= 0.2 * abs(np.mean(rhos)) and 0 < np.mean(rhos) < 1:
        cls = "Linear"
    else:
        cls = "Inconclusive"
    return QRateEstimate(ratios=[float(r) for r in ratios], classification=cls)
