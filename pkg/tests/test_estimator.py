"""The scikit-learn style transport estimator."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from logsinkhorn import SinkhornTransport


def two_clouds(seed=0, n=40, d=2, shift=0.3):
    rng = np.random.default_rng(seed)
    X = rng.uniform(0, 1, (n, d))
    Y = rng.uniform(0, 1, (n, d)) + shift
    return X, Y


class TestSinkhornTransport:
    def test_fit_sets_attributes(self):
        X, Y = two_clouds()
        est = SinkhornTransport(epsilon=0.05).fit(X, Y)
        assert est.plan_.shape == (40, 40)
        assert est.alpha_.shape == (40,)
        assert est.beta_.shape == (40,)
        assert est.report_.status == "converged"
        assert est.n_features_in_ == 2

    def test_plan_marginals_uniform(self):
        X, Y = two_clouds(seed=1)
        est = SinkhornTransport(epsilon=0.05).fit(X, Y)
        rows = est.plan_.sum(axis=1)
        np.testing.assert_allclose(rows, 1.0 / 40, atol=1e-6)

    def test_transform_maps_toward_target(self):
        X, Y = two_clouds(seed=2, shift=0.5)
        est = SinkhornTransport(epsilon=0.02).fit(X, Y)
        Z = est.transform(X)
        assert Z.shape == X.shape
        # mapped points live in the target's bounding box
        assert (Z >= Y.min(axis=0) - 1e-9).all()
        assert (Z <= Y.max(axis=0) + 1e-9).all()
        # and the map moves mass toward the target mean
        assert np.linalg.norm(Z.mean(axis=0) - Y.mean(axis=0)) < np.linalg.norm(
            X.mean(axis=0) - Y.mean(axis=0)
        )

    def test_transform_new_points(self):
        X, Y = two_clouds(seed=3)
        est = SinkhornTransport(epsilon=0.05).fit(X, Y)
        rng = np.random.default_rng(9)
        Z = est.transform(rng.uniform(0, 1, (7, 2)))
        assert Z.shape == (7, 2)

    def test_fit_transform(self):
        X, Y = two_clouds(seed=4)
        est = SinkhornTransport(epsilon=0.05)
        Z = est.fit_transform(X, Y)
        np.testing.assert_array_equal(Z, est.transform(X))

    def test_unfitted_transform_raises(self):
        with pytest.raises(NotFittedError):
            SinkhornTransport().transform(np.zeros((2, 2)))

    def test_clone_and_get_params(self):
        est = SinkhornTransport(epsilon=0.3, tolerance=1e-8, normalize_cost=False)
        params = est.get_params()
        assert params["epsilon"] == 0.3
        assert params["tolerance"] == 1e-8
        assert params["normalize_cost"] is False
        cloned = clone(est)
        assert cloned.get_params() == params

    def test_set_params(self):
        est = SinkhornTransport().set_params(epsilon=0.7)
        assert est.epsilon == 0.7

    def test_dimension_mismatch_rejected(self):
        X = np.zeros((4, 2))
        Y = np.zeros((4, 3))
        with pytest.raises(ValueError):
            SinkhornTransport(epsilon=0.1).fit(X, Y)

    def test_feature_count_checked_at_transform(self):
        X, Y = two_clouds(seed=5)
        est = SinkhornTransport(epsilon=0.05).fit(X, Y)
        with pytest.raises(ValueError):
            est.transform(np.zeros((3, 5)))

    def test_deterministic_refit(self):
        X, Y = two_clouds(seed=6)
        a = SinkhornTransport(epsilon=0.05).fit(X, Y)
        b = SinkhornTransport(epsilon=0.05).fit(X, Y)
        np.testing.assert_array_equal(a.plan_, b.plan_)
        np.testing.assert_array_equal(a.transform(X), b.transform(X))

    def test_rectangular_fit(self):
        rng = np.random.default_rng(7)
        X = rng.uniform(0, 1, (30, 3))
        Y = rng.uniform(0, 1, (50, 3))
        est = SinkhornTransport(epsilon=0.05).fit(X, Y)
        assert est.plan_.shape == (30, 50)
        assert est.transform(X).shape == (30, 3)

    def test_unnormalized_costs(self):
        X, Y = two_clouds(seed=8)
        est = SinkhornTransport(epsilon=0.05, normalize_cost=False).fit(X, Y)
        assert est.report_.status == "converged"
