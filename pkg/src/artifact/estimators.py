"""scikit-learn style wrappers around the functional core."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .model import Aggregate, TruncationPolicy
from .seminorm import SemiNorm
from .spectral import cylinder_spectral_measure, is_past_representable
from .tailcond import ZeroConditioningMass, predict


class CylinderProjector(TransformerMixin, BaseEstimator):
    """Project path vectors of length m + h + 1 onto the unit cylinder."""

    def __init__(self, m=1, h=1, p=2.0):
        self.m = m
        self.h = h
        self.p = p

    def fit(self, X, y=None):
        self.seminorm_ = SemiNorm(self.m, self.h, self.p)
        X = check_array(X, dtype=float)
        if X.shape[1] != self.seminorm_.dim:
            raise ValueError(f"expected {self.seminorm_.dim} columns, got {X.shape[1]}")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "seminorm_")
        X = check_array(X, dtype=float)
        return self.seminorm_.project(X)


class PatternPredictor(BaseEstimator):
    """Predict the limiting future pattern from observed windows.

    ``model`` is an :class:`Aggregate` or its dict form.  ``fit`` builds the
    cylinder spectral measure (no data needed); ``predict`` returns the
    modal (theta, j, k) label per window and ``predict_distribution`` the
    full pattern distributions.
    """

    def __init__(self, model=None, m=1, h=1, p=2.0, tol=1e-6, trunc_tol=1e-12, max_terms=1_000_000,
                 strict=True):
        self.model = model
        self.m = m
        self.h = h
        self.p = p
        self.tol = tol
        self.trunc_tol = trunc_tol
        self.max_terms = max_terms
        self.strict = strict

    def _aggregate(self) -> Aggregate:
        if isinstance(self.model, Aggregate):
            return self.model
        if isinstance(self.model, dict):
            return Aggregate.from_dict(self.model)
        raise ValueError("model must be an Aggregate or its dict form")

    def fit(self, X=None, y=None):
        self.aggregate_ = self._aggregate()
        self.seminorm_ = SemiNorm(self.m, self.h, self.p)
        self.verdict_ = is_past_representable(self.aggregate_, self.m, self.h)
        policy = TruncationPolicy(self.trunc_tol, self.max_terms, self.strict)
        self.measure_ = cylinder_spectral_measure(self.aggregate_, self.seminorm_, policy)
        self.n_features_in_ = self.m + 1
        return self

    def predict_distribution(self, X):
        check_is_fitted(self, "measure_")
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} columns, got {X.shape[1]}")
        out = []
        for row in X:
            try:
                out.append(predict(self.aggregate_, self.seminorm_, row, self.tol, measure=self.measure_))
            except ZeroConditioningMass:
                out.append(None)
        return out

    def predict(self, X):
        """Modal (theta, j, k) per window; rows without a match are filled with a sentinel."""
        dists = self.predict_distribution(X)
        sentinel = np.iinfo(np.int64).min
        res = np.full((len(dists), 3), sentinel, dtype=np.int64)
        for i, d in enumerate(dists):
            if d is not None:
                res[i] = d.modal().key
        return res

    def score(self, X, y):
        """Fraction of windows whose modal label equals the row of y."""
        return float(np.mean(np.all(self.predict(X) == np.asarray(y), axis=1)))


__all__ = ["CylinderProjector", "PatternPredictor"]
