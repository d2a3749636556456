"""Scikit-learn estimator wrapper around the decay-curve fit.

Only the curve-fit surface is exposed this way; the histogram pipeline
stays plain functions.  Requires scikit-learn, which is an optional
dependency (the ``sklearn`` extra).
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.exceptions import NotFittedError

from .fitkit import evaluate_model, fit

__all__ = ["DecayCurveEstimator"]


class DecayCurveEstimator(BaseEstimator, RegressorMixin):
    """Rational decay curve fit with the standard fit/predict interface.

    X holds integer supports (shape (n,) or (n, 1)), y the observed
    counts.  After fitting, ``model_`` carries the fitted parameters and
    ``diagnostics_`` the convergence record.
    """

    def __init__(self, exclude_region=None, fit_interval=None,
                 max_iterations: int = 500, tolerance: float = 1e-9):
        self.exclude_region = exclude_region
        self.fit_interval = fit_interval
        self.max_iterations = max_iterations
        self.tolerance = tolerance

    def fit(self, X, y):
        supports = np.asarray(X).reshape(-1)
        values = np.asarray(y, dtype=np.float64).reshape(-1)
        if supports.shape[0] != values.shape[0]:
            raise ValueError("X and y must have the same length")
        bins = {int(s): float(v) for s, v in zip(supports, values)}
        self.model_, self.diagnostics_ = fit(
            bins, exclude=self.exclude_region, interval=self.fit_interval,
            max_iterations=self.max_iterations, tolerance=self.tolerance)
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        if not hasattr(self, "model_"):
            raise NotFittedError("fit must be called before predict")
        supports = np.asarray(X).reshape(-1)
        return evaluate_model(self.model_, supports)
