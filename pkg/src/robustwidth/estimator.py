"""Scikit-learn estimator wrapper around the constrained l1 decoder.

``fit(X, y)`` treats ``X`` as the measurement matrix and ``y`` as the
observed measurements, mirroring the sparse linear models in
``sklearn.linear_model``, so the decoder composes with pipelines, cloning,
and parameter search.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from .solver import SolverConfig, decode
from .types import RecoveryProblem, SenseMatrix

__all__ = ["LpConstrainedBasisPursuit"]


class LpConstrainedBasisPursuit(RegressorMixin, BaseEstimator):
    """Sparse recovery by l1 minimization under an lp residual budget.

    Parameters
    ----------
    eps : float, default 0.0
        Radius of the lp ball the residual must lie in.
    p : float, default 2.0
        Residual norm exponent; any finite value >= 1 or ``np.inf``.
    max_iterations : int, default 20000
        Iteration cap for the primal-dual solve.
    feasibility_tol : float, default 1e-8
        Absolute slack allowed on the residual constraint at convergence.
    fixed_point_tol : float, default 1e-9
        Max-norm displacement of the iterates at which the solve stops.
    step_scale : float, default 0.95
        Fraction of the largest provably convergent step size to use.
    operator_norm : float or None, default None
        Spectral norm of X if known; estimated by power iteration otherwise.

    Attributes
    ----------
    coef_ : ndarray of shape (n_features,)
        The recovered sparse vector.
    objective_ : float
        l1 norm of ``coef_``.
    residual_ : float
        lp norm of ``X @ coef_ - y``.
    n_iter_ : int
        Iterations used by the solver.
    converged_ : bool
        Whether both stopping criteria were met within the iteration cap.
    """

    def __init__(
        self,
        eps: float = 0.0,
        p: float = 2.0,
        max_iterations: int = 20000,
        feasibility_tol: float = 1e-8,
        fixed_point_tol: float = 1e-9,
        step_scale: float = 0.95,
        operator_norm: float | None = None,
    ):
        self.eps = eps
        self.p = p
        self.max_iterations = max_iterations
        self.feasibility_tol = feasibility_tol
        self.fixed_point_tol = fixed_point_tol
        self.step_scale = step_scale
        self.operator_norm = operator_norm

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        problem = RecoveryProblem(
            matrix=SenseMatrix(X),
            observations=np.asarray(y, dtype=np.float64),
            noise_level=self.eps,
            p=self.p,
        )
        config = SolverConfig(
            max_iterations=self.max_iterations,
            feasibility_tol=self.feasibility_tol,
            fixed_point_tol=self.fixed_point_tol,
            step_scale=self.step_scale,
            operator_norm_estimate=self.operator_norm,
        )
        result = decode(problem, config)
        self.coef_ = result.solution.values.copy()
        self.objective_ = result.objective
        self.residual_ = result.residual_lp
        self.feasibility_gap_ = result.feasibility_gap
        self.n_iter_ = result.iterations
        self.converged_ = result.converged
        self.n_features_in_ = X.shape[1]
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = check_array(X)
        return X @ self.coef_
