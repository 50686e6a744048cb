import itertools
import logging

import numpy as np
import pytest

from opinion_detect.classifier import (
    Hyperparams,
    ModelParams,
    conjugate_gradient,
    objective_and_gradient,
    predict,
    predict_index,
    predict_many,
    predict_proba,
    predict_proba_many,
    train,
)
from opinion_detect.labels import CLASS_ORDER


def separable_toy():
    X = np.array([[0.0, 0.0], [1.0, 0.2], [3.0, 3.0], [4.0, 2.5]])
    y = ["a", "a", "b", "b"]
    return X, y


def brute_force_separator(X, y):
    """Search a grid of lines w.x + c = 0 for one that splits the two labels."""
    grid = np.linspace(-5, 5, 41)
    signs = np.array([1 if label == y[0] else -1 for label in y])
    for w1, w2, c in itertools.product(grid, grid, grid):
        side = np.sign(X @ np.array([w1, w2]) + c)
        if np.all(side == signs) or np.all(side == -signs):
            return w1, w2, c
    return None


class TestHyperparams:
    def test_defaults(self):
        h = Hyperparams()
        assert (h.C, h.tol, h.max_iter) == (0.9474722736821756, 0.1, 100)
        assert (h.armijo_c1, h.backtrack, h.max_halvings) == (1e-4, 0.5, 30)
        assert h.cg_limit(10) == 200 and h.cg_limit(400) == 1000

    @pytest.mark.parametrize("kwargs", [{"C": 0}, {"tol": -1}, {"max_iter": 0}, {"cg_max_iter": 0}])
    def test_invalid(self, kwargs):
        with pytest.raises(ValueError):
            Hyperparams(**kwargs)


class TestConjugateGradient:
    def test_solves_spd_system(self):
        rng = np.random.default_rng(0)
        A = rng.normal(size=(6, 6))
        H = A @ A.T + np.eye(6)
        g = rng.normal(size=6)
        s, _ = conjugate_gradient(lambda v: H @ v, g, 1000)
        gnorm = np.linalg.norm(g)
        assert np.linalg.norm(H @ s + g) <= min(0.5, np.sqrt(gnorm)) * gnorm

    def test_negative_curvature_first_step(self):
        g = np.array([1.0, -2.0])
        s, it = conjugate_gradient(lambda v: -v, g, 10)
        np.testing.assert_array_equal(s, -g)
        assert it == 0


class TestTrain:
    def test_separable_toy(self):
        X, y = separable_toy()
        assert brute_force_separator(X, y) is not None
        model, report = train(X, y, Hyperparams())
        assert model.classes == ("a", "b")
        assert predict_many(model, X) == y

    def test_one_example_per_class(self):
        X = np.eye(4)
        model, report = train(X, list(CLASS_ORDER))
        trace = report.objective_trace
        assert all(b < a for a, b in zip(trace, trace[1:]))
        assert report.converged and report.grad_inf_norm <= 0.1
        assert predict_many(model, X) == list(CLASS_ORDER)

    def test_deterministic(self):
        rng = np.random.default_rng(1)
        X = rng.normal(size=(60, 5))
        y = [CLASS_ORDER[i % 4] for i in range(60)]
        m1, r1 = train(X, y, Hyperparams(seed=5))
        m2, r2 = train(X, y, Hyperparams(seed=5))
        assert m1 == m2 and r1 == r2
        assert m1.W.tobytes() == m2.W.tobytes()

    def test_trace_non_increasing_and_report(self):
        rng = np.random.default_rng(2)
        centers = rng.normal(scale=2, size=(4, 3))
        idx = rng.integers(0, 4, size=200)
        idx[:4] = range(4)
        X = centers[idx] + rng.normal(size=(200, 3))
        y = [CLASS_ORDER[i] for i in idx]
        model, report = train(X, y, Hyperparams(tol=1e-6))
        trace = report.objective_trace
        assert all(b <= a for a, b in zip(trace, trace[1:]))
        assert len(trace) == report.iterations + 1
        assert report.objective == trace[-1]
        assert report.converged and report.grad_inf_norm <= 1e-6
        J, (gW, gb) = objective_and_gradient(model.W, model.b, X, [CLASS_ORDER.index(c) for c in y], model.hyperparams.C)
        assert J == pytest.approx(report.objective)
        assert max(np.abs(gW).max(), np.abs(gb).max()) <= 1e-6

    def test_max_iter_reached(self, caplog):
        rng = np.random.default_rng(3)
        X = rng.normal(size=(50, 4)) * 10
        y = [CLASS_ORDER[i % 4] for i in range(50)]
        with caplog.at_level(logging.WARNING):
            _, report = train(X, y, Hyperparams(tol=1e-14, max_iter=1))
        assert report.iterations == 1 and not report.converged
        assert "without meeting" in caplog.text

    def test_missing_class(self):
        X = np.eye(3)
        with pytest.raises(ValueError, match="absent"):
            train(X, ["gain", "non-gain", "losses"], classes=CLASS_ORDER)

    def test_label_outside_classes(self):
        with pytest.raises(ValueError, match="not one of"):
            train(np.eye(2), ["a", "z"], classes=("a", "b"))

    def test_biases_stay_centred(self):
        # The uniform-bias direction is never excited from a zero start.
        rng = np.random.default_rng(4)
        X = rng.normal(size=(40, 3))
        y = [CLASS_ORDER[i % 4] for i in range(40)]
        model, _ = train(X, y, Hyperparams(tol=1e-8))
        assert abs(model.b.sum()) < 1e-10


class TestPredict:
    def model(self, W, b, classes=CLASS_ORDER):
        return ModelParams(np.asarray(W, float), np.asarray(b, float), classes)

    def test_zero_model_uniform_and_tie_break(self):
        m = self.model(np.zeros((4, 3)), np.zeros(4))
        np.testing.assert_array_equal(predict_proba(m, np.ones(3)), [0.25] * 4)
        assert predict(m, np.ones(3)) == "gain"

    def test_bias_shift_invariance(self):
        rng = np.random.default_rng(5)
        W, b, x = rng.normal(size=(4, 3)), rng.normal(size=4), rng.normal(size=3)
        p1 = predict_proba(self.model(W, b), x)
        p2 = predict_proba(self.model(W, b + 7.5), x)
        np.testing.assert_allclose(p1, p2, rtol=1e-12)
        assert predict(self.model(W, b), x) == predict(self.model(W, b + 7.5), x)

    def test_two_class_closed_form(self):
        m = self.model([[1.0], [-1.0]], [0.0, 0.0], ("a", "b"))
        p = predict_proba(m, np.array([0.5]))
        e = np.exp(1.0)
        np.testing.assert_allclose(p, [e / (e + 1), 1 / (e + 1)], rtol=1e-14)
        np.testing.assert_allclose(p, [0.7311, 0.2689], atol=5e-5)

    def test_argmax(self):
        m = self.model(np.zeros((4, 1)), np.log([0.1, 0.2, 0.3, 0.4]))
        assert predict_index(m, np.zeros(1)) == 3 and predict(m, np.zeros(1)) == "losses"

    def test_logit_scaling_invariance(self):
        rng = np.random.default_rng(6)
        W, b = rng.normal(size=(4, 3)), rng.normal(size=4)
        for _ in range(50):
            x = rng.normal(size=3)
            lam = float(rng.uniform(0.1, 10))
            assert predict(self.model(W, b), x) == predict(self.model(lam * W, lam * b), x)

    def test_probabilities_valid(self):
        rng = np.random.default_rng(7)
        m = self.model(rng.normal(size=(4, 5)) * 20, rng.normal(size=4))
        P = predict_proba_many(m, rng.normal(size=(200, 5)))
        assert np.all((P >= 0) & (P <= 1))
        np.testing.assert_allclose(P.sum(axis=1), 1.0, atol=1e-9)

    def test_batch_equals_single(self):
        rng = np.random.default_rng(8)
        m = self.model(rng.normal(size=(4, 5)), rng.normal(size=4))
        X = rng.normal(size=(10, 5))
        P = predict_proba_many(m, X)
        for x, row in zip(X, P):
            assert predict_proba(m, x).tobytes() == row.tobytes()

    def test_dimension_mismatch(self):
        m = self.model(np.zeros((4, 3)), np.zeros(4))
        with pytest.raises(ValueError, match="expects"):
            predict_proba(m, np.zeros(2))

    def test_model_invariants(self):
        with pytest.raises(ValueError):
            self.model(np.zeros((1, 2)), np.zeros(1), ("a",))
        with pytest.raises(ValueError):
            self.model(np.full((4, 2), np.nan), np.zeros(4))
        with pytest.raises(ValueError):
            self.model(np.zeros((3, 2)), np.zeros(4))
