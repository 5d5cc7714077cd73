import numpy as np
import pytest

from causet.errors import DimensionMismatchError, SingleClassError
from causet.learners import (
    FittedModel,
    LearnerSpec,
    fit_gbt,
    fit_learner,
    fit_linear,
    fit_logistic,
)
from causet.rng import make_rng

from oracles import logistic_loglik, normal_equations_fit


class TestLearnerSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            LearnerSpec("mlp")
        with pytest.raises(ValueError):
            LearnerSpec("gbt", max_iterations=0)
        with pytest.raises(ValueError):
            LearnerSpec("gbt", learning_rate=-0.1)
        with pytest.raises(ValueError):
            LearnerSpec("gbt", max_depth=0)
        with pytest.raises(ValueError):
            LearnerSpec("linear", ridge=-1.0)

    def test_zero_learning_rate_allowed(self):
        LearnerSpec("gbt", learning_rate=0.0)


class TestFitLinear:
    def test_two_point_line(self):
        m = fit_linear(np.array([[0.0], [1.0]]), np.array([1.0, 3.0]))
        assert m.intercept == pytest.approx(1.0, abs=1e-6)
        assert m.coefficient("x0") == pytest.approx(2.0, abs=1e-6)

    def test_noiseless_recovery(self):
        x = np.linspace(0.0, 10.0, 50).reshape(-1, 1)
        y = 2.0 * x[:, 0]
        m = fit_linear(x, y)
        assert m.coefficient("x0") == pytest.approx(2.0, abs=1e-9)
        assert np.abs(m.predict(x) - y).max() < 1e-8

    def test_matches_normal_equations_oracle(self):
        rng = make_rng(21)
        for _ in range(30):
            X = rng.standard_normal((20, 3))
            y = rng.standard_normal(20)
            w = rng.uniform(0.1, 2.0, size=20)
            m = fit_linear(X, y, w=w)
            beta = normal_equations_fit(X, y, w=w, ridge=m.spec.ridge)
            got = np.array([m.intercept, *(m.coefficient(f"x{i}") for i in range(3))])
            assert np.allclose(got, beta, rtol=1e-8, atol=1e-10)

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            fit_linear(np.zeros((3, 2)), np.zeros(4))

    def test_column_order_independence(self):
        rng = make_rng(2)
        X = rng.standard_normal((30, 3))
        y = X @ np.array([1.0, -2.0, 0.5]) + rng.standard_normal(30)
        m = fit_linear(X, y, feature_names=("a", "b", "c"))
        direct = m.predict(X, feature_names=("a", "b", "c"))
        permuted = m.predict(X[:, [2, 0, 1]], feature_names=("c", "a", "b"))
        assert np.array_equal(direct, permuted)

    def test_feature_set_enforced(self):
        m = fit_linear(np.zeros((2, 1)), np.zeros(2), feature_names=("a",))
        with pytest.raises(DimensionMismatchError):
            m.predict(np.zeros((2, 1)), feature_names=("b",))
        with pytest.raises(DimensionMismatchError):
            m.predict(np.zeros((2, 2)))


class TestFitLogistic:
    def test_symmetric_data_zero_intercept(self):
        X = np.array([[-1.0], [1.0], [-1.0], [1.0]])
        y = np.array([0.0, 1.0, 0.0, 1.0])
        m = fit_logistic(X, y)
        assert m.intercept == pytest.approx(0.0, abs=1e-6)

    def test_single_class_rejected(self):
        with pytest.raises(SingleClassError):
            fit_logistic(np.zeros((3, 1)), np.ones(3))

    def test_separable_hits_cap_and_stays_monotone(self):
        x = np.linspace(-2, 2, 40).reshape(-1, 1)
        y = (x[:, 0] > 0).astype(float)
        m = fit_logistic(x, y)
        p = m.predict(x)
        assert np.all(np.diff(p) >= 0)
        assert p[0] < 0.01 and p[-1] > 0.99

    def test_beats_grid_search_oracle(self):
        rng = make_rng(33)
        x = rng.standard_normal(60).reshape(-1, 1)
        y = (rng.uniform(size=60) < 1.0 / (1.0 + np.exp(-(0.4 + 1.3 * x[:, 0])))).astype(float)
        m = fit_logistic(x, y)
        best = logistic_loglik(x, y, m.intercept, [m.coefficient("x0")])
        grid = np.linspace(-10.0, 10.0, 201)
        for b0 in grid:
            etas = b0 + np.outer(grid, x[:, 0])
            lls = np.sum(y * etas - np.logaddexp(0.0, etas), axis=1)
            assert best >= lls.max() - 1e-6

    def test_intercept_only(self):
        y = np.array([1.0, 0.0, 0.0, 0.0])
        m = fit_logistic(np.empty((4, 0)), y)
        assert m.predict(np.empty((4, 0)))[0] == pytest.approx(0.25, abs=1e-6)


class TestFitGbt:
    def test_zero_learning_rate_predicts_mean(self):
        rng = make_rng(1)
        X = rng.uniform(size=(40, 2))
        y = rng.standard_normal(40)
        m = fit_gbt(X, y, spec=LearnerSpec("gbt", learning_rate=0.0, max_iterations=5))
        assert np.allclose(m.predict(X), y.mean())

    def test_step_function_depth_one(self):
        rng = make_rng(4)
        x = np.sort(rng.uniform(-1, 1, size=200)).reshape(-1, 1)
        y = (x[:, 0] > 0).astype(float)
        m = fit_gbt(x, y, spec=LearnerSpec("gbt", max_depth=1))
        assert np.mean((m.predict(x) - y) ** 2) < 1e-6

    def test_training_mse_non_increasing(self):
        for seed in range(20):
            rng = make_rng(seed)
            X = rng.uniform(size=(120, 3))
            y = np.sin(3 * X[:, 0]) + X[:, 1] + rng.standard_normal(120) * 0.3
            m = fit_gbt(X, y, spec=LearnerSpec("gbt", max_iterations=40))
            stages = m.staged_predictions(X)
            mses = np.mean((stages - y) ** 2, axis=1)
            assert np.all(np.diff(mses) <= 1e-12)

    def test_deterministic(self):
        rng = make_rng(8)
        X = rng.uniform(size=(100, 4))
        y = rng.standard_normal(100)
        a = fit_gbt(X, y).predict(X)
        b = fit_gbt(X, y).predict(X)
        assert np.array_equal(a, b)

    def test_column_order_independence(self):
        rng = make_rng(12)
        X = rng.uniform(size=(80, 3))
        y = X[:, 0] * 2 + (X[:, 1] > 0.5) + rng.standard_normal(80) * 0.1
        m = fit_gbt(X, y, feature_names=("a", "b", "c"))
        assert np.array_equal(
            m.predict(X, feature_names=("a", "b", "c")),
            m.predict(X[:, [1, 2, 0]], feature_names=("b", "c", "a")),
        )

    def test_weighted_fit_ignores_zero_weight_rows(self):
        X = np.array([[0.0], [1.0], [2.0], [3.0]])
        y = np.array([1.0, 1.0, 5.0, 5.0])
        w = np.array([1.0, 1.0, 1.0, 0.0])
        m = fit_gbt(X, y, w=w, spec=LearnerSpec("gbt", leaf_penalty=0.0, min_leaf=1))
        m2 = fit_gbt(X[:3], y[:3], spec=LearnerSpec("gbt", leaf_penalty=0.0, min_leaf=1))
        assert m.predict(X[:3]) == pytest.approx(m2.predict(X[:3]))

    def test_saturates_noiseless_data(self):
        rng = make_rng(15)
        X = rng.uniform(size=(60, 2))
        y = np.floor(X[:, 0] * 3) + 2 * (X[:, 1] > 0.7)
        m = fit_gbt(X, y, spec=LearnerSpec("gbt", leaf_penalty=0.0, min_leaf=1))
        assert np.mean((m.predict(X) - y) ** 2) < 1e-8

    def test_zero_features(self):
        y = np.array([1.0, 2.0, 3.0])
        m = fit_gbt(np.empty((3, 0)), y)
        assert np.allclose(m.predict(np.empty((3, 0))), y.mean())


class TestSerialization:
    def test_describe_roundtripable_text(self):
        rng = make_rng(3)
        X = rng.uniform(size=(30, 2))
        lin = fit_linear(X, X[:, 0] + 1.0, feature_names=("u", "v"))
        text = lin.describe()
        assert "kind: linear" in text and "coef u:" in text
        gbt = fit_gbt(X, X[:, 1], spec=LearnerSpec("gbt", max_iterations=3))
        gtext = gbt.describe()
        assert "kind: gbt" in gtext and "trees: 3" in gtext

    def test_dispatcher(self):
        X = np.array([[0.0], [1.0]])
        assert fit_learner(LearnerSpec("linear"), X, np.array([0.0, 1.0])).spec.kind == "linear"
        with pytest.raises(ValueError):
            fit_learner(LearnerSpec("logistic"), X, np.array([0.0, 1.0]), w=np.ones(2))
