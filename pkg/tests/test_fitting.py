import types

import numpy as np
import pytest

from gamenewton import dominating_fit, estimate_q_rate
from gamenewton.errors import DegenerateFit, TooFewPoints
from gamenewton.fitting import violation_fraction


def _trace(errors):
    return types.SimpleNamespace(error_to_ref=list(errors))


def test_dominating_fit_recovers_planted_coefficients():
    rng = np.random.default_rng(1)
    X = rng.uniform(0.1, 1.0, size=(200, 2))
    coef_true = np.array([0.7, 0.3])
    y = X @ coef_true * rng.uniform(0.2, 1.0, size=200)  # y below the plane
    coef, rms, method = dominating_fit(X, y)
    pred = X @ coef
    assert np.all(y <= pred * (1 + 1e-9) + 1e-15)
    # the fit should be tight: some rows near the bound
    assert np.min(pred - y) <= 1e-6 * np.max(y)


def test_dominating_fit_handles_tiny_scales():
    rng = np.random.default_rng(2)
    X = rng.uniform(0.1, 1.0, size=(100, 2)) * 1e-12
    y = (X @ np.array([0.5, 0.5])) * 0.9
    coef, _, _ = dominating_fit(X, y)
    assert violation_fraction(X, y, coef) == 0.0


def test_violation_fraction_counts_exceedances():
    X = np.ones((4, 1))
    y = np.array([0.5, 1.0, 1.2, 2.0])
    coef = np.array([1.0])
    # slack 1.1: rows with y > 1.1 are violations
    assert violation_fraction(X, y, coef, slack=1.1) == pytest.approx(0.5)


def test_q_rate_quadratic_sequence():
    e = [1e-1]
    for _ in range(5):
        e.append(0.5 * e[-1] ** 2)
    est = estimate_q_rate(_trace(e))
    assert est.classification == "Quadratic"
    assert max(est.ratios) < 1.0


def test_q_rate_linear_sequence():
    e = [0.5**k for k in range(12)]
    est = estimate_q_rate(_trace(e))
    assert est.classification == "Linear"


def test_q_rate_ignores_post_convergence_floor():
    e = [1e-1, 1e-2, 1e-4, 1e-8, 3e-13, 3e-13, 3e-13, 3e-13]
    est = estimate_q_rate(_trace(e))
    assert est.classification == "Quadratic"


def test_q_rate_too_few_points():
    with pytest.raises(TooFewPoints):
        estimate_q_rate(_trace([1e-1, 1e-3]))
    with pytest.raises(TooFewPoints):
        estimate_q_rate(_trace(None) if False else types.SimpleNamespace(error_to_ref=None))
