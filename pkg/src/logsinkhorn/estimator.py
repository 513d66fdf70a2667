"""Scikit-learn style estimator wrapping the transport solver."""

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .applications import barycentric_map
from .costs import squared_euclidean_cost
from .errors import NonFiniteResult
from .solver import materialize_plan, solve
from .types import (
    STATUS_NUMERICAL_FAILURE,
    CostMatrix,
    SinkhornConfig,
    make_distribution,
)

__all__ = ["SinkhornTransport"]


class SinkhornTransport(TransformerMixin, BaseEstimator):
    """Entropic optimal transport as a transformer.

    ``fit(X, y)`` solves entropic OT between a source sample ``X`` and a
    target sample ``y`` (both point arrays of the same dimension) under
    squared Euclidean cost with uniform weights. ``transform(X)`` then maps
    points into the target domain: each fitted source point moves to the
    barycentric average of the targets under the plan, and an arbitrary
    point moves with its nearest fitted source point (ties to the lowest
    index), the same completion rule the color-transfer pipeline uses.

    The solve runs in double precision internally; ``precision`` is not a
    hyperparameter because estimator output feeds downstream models where
    single-precision marginal error floors are not worth trading for speed.

    Parameters
    ----------
    epsilon : float, default 0.01
        Regularization strength. Smaller values sharpen the plan toward
        the unregularized optimum at the price of more iterations.
    tolerance : float, default 1e-6
        L1 marginal-error convergence threshold.
    max_iterations : int, default 10000
    check_interval : int, default 10
    normalize_cost : bool, default True
        Rescale costs so the largest entry is 1, making ``epsilon``
        comparable across datasets of different diameters.

    Attributes
    ----------
    source_ : ndarray of shape (n, d)
        Fitted source points.
    target_ : ndarray of shape (m, d)
        Fitted target points.
    plan_ : ndarray of shape (n, m)
        Materialized transport plan.
    report_ : SolveReport
        Status, iterations, marginal error, cost, and error trace.
    alpha_, beta_ : ndarray
        Converged dual potentials.
    n_features_in_ : int
    """

    def __init__(
        self,
        epsilon=0.01,
        tolerance=1e-6,
        max_iterations=10000,
        check_interval=10,
        normalize_cost=True,
    ):
        self.epsilon = epsilon
        self.tolerance = tolerance
        self.max_iterations = max_iterations
        self.check_interval = check_interval
        self.normalize_cost = normalize_cost

    def fit(self, X, y):
        """Solve transport from source sample X to target sample y."""
        X = check_array(X, dtype=np.float64)
        y = check_array(y, dtype=np.float64)
        if X.shape[1] != y.shape[1]:
            raise ValueError(
                f"source and target dimensions differ: {X.shape[1]} vs {y.shape[1]}"
            )
        cost = squared_euclidean_cost(X, y)
        if self.normalize_cost and cost.value_range > 0:
            cmax = cost.values.max()
            cost = CostMatrix(values=np.ascontiguousarray(cost.values / cmax))
        mu = make_distribution(np.ones(X.shape[0]))
        nu = make_distribution(np.ones(y.shape[0]))
        config = SinkhornConfig(
            epsilon=self.epsilon,
            tolerance=self.tolerance,
            max_iterations=self.max_iterations,
            check_interval=self.check_interval,
            precision="double",
        )
        report, potentials = solve(cost, mu, nu, config)
        if report.status == STATUS_NUMERICAL_FAILURE:
            raise NonFiniteResult(
                f"transport solve failed numerically at epsilon={self.epsilon}"
            )
        plan = materialize_plan(
            cost, mu, nu, potentials.alpha, potentials.beta, self.epsilon
        )
        self.source_ = X
        self.target_ = y
        self.plan_ = plan.values
        self.alpha_ = potentials.alpha
        self.beta_ = potentials.beta
        self.report_ = report
        self.n_features_in_ = X.shape[1]
        self._mapped_sources = barycentric_map(plan, y)
        return self

    def transform(self, X):
        """Map points into the target domain through the fitted plan."""
        check_is_fitted(self, "plan_")
        X = check_array(X, dtype=np.float64)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(
                f"expected {self.n_features_in_} features, got {X.shape[1]}"
            )
        out = np.empty_like(X)
        block = 2048
        for start in range(0, X.shape[0], block):
            px = X[start : start + block]
            d = px[:, None, :] - self.source_[None, :, :]
            nearest = np.argmin((d * d).sum(axis=2), axis=1)
            out[start : start + block] = self._mapped_sources[nearest]
        return out
