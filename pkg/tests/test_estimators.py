import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from dirichlet_lab.estimators import CoveringDimensionEstimator, DirichletScanner, UniformExponentEstimator
from dirichlet_lab.psi import PowerLog
from dirichlet_lab.scan import ScanConfig, direct_check


def test_scanner_predicts_window_verdicts():
    X = np.array([[0.0, 0.5], [0.37, 1.0], [0.3, 0.2]])
    est = DirichletScanner(psi=PowerLog(0.8), T_window=(10.0, 1e3), T_samples=6).fit(X)
    labels = est.predict(X)
    assert labels[0] == "FailsAt" and labels[1] == "DirichletOnWindow"
    cfg = ScanConfig(PowerLog(0.8), T_window=(10.0, 1e3), T_samples=6)
    assert labels[2] == direct_check(0.3, 0.2, cfg).status.value
    assert set(labels) <= set(est.classes_)


def test_scanner_methods_agree_on_fixture():
    X = np.array([[0.0, 0.5]])
    a = DirichletScanner(method="direct").fit(X).predict(X)
    b = DirichletScanner(method="dani").fit(X).predict(X)
    assert a.tolist() == b.tolist() == ["FailsAt"]


def test_scanner_validation():
    with pytest.raises(NotFittedError):
        DirichletScanner().predict([[0.0, 0.5]])
    with pytest.raises(ValueError):
        DirichletScanner().fit(np.zeros((2, 3)))
    with pytest.raises(ValueError):
        DirichletScanner(method="other").fit(np.zeros((2, 2)))
    est = DirichletScanner(m=2, n=1).fit(np.zeros((1, 4)))
    with pytest.raises(ValueError):
        est.predict(np.zeros((1, 3)))


def test_params_round_trip():
    est = DirichletScanner(psi=PowerLog(0.5), T_samples=4, method="dani")
    assert clone(est).get_params() == est.get_params()


def test_exponent_transformer():
    X = np.array([[0.0, 0.5], [0.3, 2.0]])
    out = UniformExponentEstimator(T_max=1e8, tol=1e-4).fit_transform(X)
    assert out.shape == (2, 1)
    assert abs(out[0, 0] - np.log(2) / np.log(1e8)) < 2e-4
    assert out[1, 0] == np.inf


def test_covering_dimension():
    est = CoveringDimensionEstimator(psi=PowerLog(0.5), C0=-3.0).fit(range(4, 10))
    assert abs(est.dimension_ - 2 / 3) / (2 / 3) < 0.15
    assert est.r2_ > 0.99 and est.K_emp_ > 0
    pred = est.predict([4, 9])
    assert pred[1] > pred[0]
