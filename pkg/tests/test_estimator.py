import numpy as np
import pytest
from sklearn.base import clone

from robustwidth.estimator import LpConstrainedBasisPursuit
from robustwidth.sensing import RngStream, gen_gaussian_matrix, gen_sparse_signal


def _instance(seed=0):
    matrix = gen_gaussian_matrix(12, 20, RngStream(seed))
    signal = gen_sparse_signal(20, 2, RngStream(seed).stream(1))
    return matrix.values, signal.values


def test_fit_recovers_planted_signal():
    X, coef = _instance()
    est = LpConstrainedBasisPursuit(eps=0.0, p=2.0).fit(X, X @ coef)
    assert est.converged_
    assert np.linalg.norm(est.coef_ - coef) <= 1e-4 * np.linalg.norm(coef)
    np.testing.assert_allclose(est.predict(X), X @ coef, atol=1e-3)


def test_sklearn_param_protocol():
    est = LpConstrainedBasisPursuit(eps=0.5, p=1.0, max_iterations=500)
    params = est.get_params()
    assert params["eps"] == 0.5
    assert params["p"] == 1.0
    cloned = clone(est)
    assert cloned.get_params() == params
    est.set_params(eps=0.25)
    assert est.eps == 0.25


def test_predict_requires_fit():
    est = LpConstrainedBasisPursuit()
    with pytest.raises(Exception):
        est.predict(np.eye(3))


def test_input_validation():
    est = LpConstrainedBasisPursuit()
    with pytest.raises(ValueError):
        est.fit(np.array([[np.nan, 1.0]]), np.array([1.0]))
    X, coef = _instance()
    with pytest.raises(ValueError):
        est.fit(X, (X @ coef)[:-1])


def test_noise_budget_is_enforced():
    X, coef = _instance(3)
    y = X @ coef
    est = LpConstrainedBasisPursuit(eps=0.3, p=2.0).fit(X, y)
    assert est.converged_
    assert np.linalg.norm(X @ est.coef_ - y) <= 0.3 + 1e-8
    assert est.objective_ <= np.abs(coef).sum() + 1e-6
