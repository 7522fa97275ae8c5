"""Scikit-learn style wrappers around the functional API.

Rows of ``X`` for the scanners are ``[A entries (row-major), b entries]``.
"""

import numpy as np
from sklearn.base import BaseEstimator, ClassifierMixin, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .covering import cover_sweep, fitted_K, slope_fit
from .psi import PowerLog
from .scan import ScanConfig, Status, dani_check, direct_check, uniform_exponent


def _split_row(row, m, n):
    return row[: m * n].reshape(m, n), row[m * n :]


class DirichletScanner(ClassifierMixin, BaseEstimator):
    """Label each affine form with its window verdict."""

    def __init__(self, psi=None, m=1, n=1, T_window=(10.0, 1e4), T_samples=16,
                 method="direct", C0=1.0, strict=False):
        self.psi = psi
        self.m = m
        self.n = n
        self.T_window = T_window
        self.T_samples = T_samples
        self.method = method
        self.C0 = C0
        self.strict = strict

    def _config(self):
        psi = self.psi if self.psi is not None else PowerLog(1.0)
        return ScanConfig(psi=psi, m=self.m, n=self.n, T_window=self.T_window, T_samples=self.T_samples)

    def fit(self, X, y=None):
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.m * self.n + self.m:
            raise ValueError(f"X must have m*n + m = {self.m * self.n + self.m} columns")
        if self.method not in ("direct", "dani"):
            raise ValueError(f"unknown method {self.method!r}")
        self.config_ = self._config()
        self.n_features_in_ = X.shape[1]
        self.classes_ = np.array([s.value for s in Status])
        return self

    def verdicts(self, X):
        check_is_fitted(self, "config_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} columns, expected {self.n_features_in_}")
        out = []
        for row in X:
            A, b = _split_row(row, self.m, self.n)
            if self.method == "direct":
                out.append(direct_check(A, b, self.config_, strict=self.strict))
            else:
                out.append(dani_check(A, b, self.config_, C0=self.C0))
        return out

    def predict(self, X):
        return np.array([v.status.value for v in self.verdicts(X)])


class UniformExponentEstimator(TransformerMixin, BaseEstimator):
    """Map each affine form to its window-truncated uniform exponent."""

    def __init__(self, m=1, n=1, T_max=1e6, tol=1e-3, w_bracket=(0.0, 2.0)):
        self.m = m
        self.n = n
        self.T_max = T_max
        self.tol = tol
        self.w_bracket = w_bracket

    def fit(self, X, y=None):
        X = check_array(X)
        if X.shape[1] != self.m * self.n + self.m:
            raise ValueError(f"X must have m*n + m = {self.m * self.n + self.m} columns")
        self.n_features_in_ = X.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        vals = []
        for row in X:
            A, b = _split_row(row, self.m, self.n)
            est = uniform_exponent(A, b, self.w_bracket, self.T_max, self.tol, self.m, self.n)
            vals.append(est.value)
        return np.array(vals)[:, None]


class CoveringDimensionEstimator(BaseEstimator):
    """Fit the growth rate of cube-cover counts over a list of flow times."""

    def __init__(self, psi=None, m=1, n=1, C0=1.0, sampler="centers"):
        self.psi = psi
        self.m = m
        self.n = n
        self.C0 = C0
        self.sampler = sampler

    def fit(self, t_list, y=None):
        t = np.asarray(t_list, dtype=float).ravel()
        psi = self.psi if self.psi is not None else PowerLog(0.5)
        self.reports_ = cover_sweep(self.m, self.n, psi, t, self.C0, self.sampler)
        fit = slope_fit(self.reports_)
        self.slope_, self.intercept_, self.r2_ = fit.slope, fit.intercept, fit.r2
        self.K_emp_, _ = fitted_K(self.reports_)
        self.dimension_ = self.slope_ * self.m * self.n / (self.m + self.n)
        return self

    def predict(self, t_list):
        check_is_fitted(self, "slope_")
        return np.exp(self.intercept_ + self.slope_ * np.asarray(t_list, dtype=float))
