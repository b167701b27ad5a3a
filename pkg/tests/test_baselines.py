import warnings

import numpy as np
import pytest

from recessnet.baselines import (
    RIDGE_GRID,
    ConvergenceWarning,
    LogisticParams,
    fit_logistic,
    logistic_bytes,
    logistic_from_bytes,
    logistic_loss_grad,
    predict_logistic,
    select_ridge_lambda,
)
from recessnet.errors import DegenerateTargetError, StructuralError
from recessnet.tensors import blocked_cv_splits


def newton(X, y, lam, iters=100):
    """Independent solver: Newton's method on the penalized mean log-loss."""
    n, d = X.shape
    A = np.c_[X, np.ones(n)]
    theta = np.zeros(d + 1)
    pen = np.r_[np.full(d, 2 * lam), 0.0]
    for _ in range(iters):
        p = 1 / (1 + np.exp(-A @ theta))
        g = A.T @ (p - y) / n + pen * theta
        H = (A * (p * (1 - p))[:, None]).T @ A / n + np.diag(pen)
        theta -= np.linalg.solve(H, g)
    return theta[:-1], theta[-1]


def test_one_feature_matches_newton():
    X = np.r_[-np.ones(50), np.ones(50)][:, None]
    y = np.r_[np.zeros(50), np.ones(50)]
    fitted = fit_logistic(X, y, 0.1)
    w, b = newton(X, y, 0.1)
    assert fitted.converged
    assert fitted.weights[0] == pytest.approx(w[0], abs=1e-4)
    assert fitted.intercept == pytest.approx(b, abs=1e-4)


def test_wide_problem_matches_newton(rng):
    X = rng.normal(size=(200, 40))
    y = (X[:, 0] - X[:, 1] + rng.normal(size=200) > 0).astype(float)
    for lam in (0.01, 1.0):
        fitted = fit_logistic(X, y, lam)
        w, b = newton(X, y, lam)
        np.testing.assert_allclose(fitted.weights, w, atol=1e-5)
        assert fitted.intercept == pytest.approx(b, abs=1e-5)


def test_huge_penalty_gives_base_rate():
    r = np.random.default_rng(1)
    X = r.normal(size=(300, 4))
    y = (r.random(300) < 0.2).astype(float)
    fitted = fit_logistic(X, y, 1e6)
    assert np.linalg.norm(fitted.weights) < 1e-3
    base = y.mean()
    assert fitted.intercept == pytest.approx(np.log(base / (1 - base)), abs=1e-3)


def test_recovers_generating_weights():
    r = np.random.default_rng(2)
    X = r.normal(size=(20000, 3))
    truth = np.array([1.0, -0.5, 0.0])
    y = (r.random(20000) < 1 / (1 + np.exp(-(X @ truth + 0.3)))).astype(float)
    fitted = fit_logistic(X, y, 0.0)
    assert np.all(np.abs(fitted.weights - truth) < 0.1)
    assert abs(fitted.intercept - 0.3) < 0.1
    assert fitted.kind == "logit" and fitted.n_params() == 4


def test_separable_data_warns():
    X = np.r_[-np.ones(10), np.ones(10)][:, None]
    y = np.r_[np.zeros(10), np.ones(10)]
    with pytest.warns(ConvergenceWarning):
        fitted = fit_logistic(X, y, 0.0, max_iter=500)
    assert not fitted.converged and fitted.iterations == 500


def test_norm_shrinks_along_grid(rng):
    X = rng.normal(size=(150, 6))
    y = (X @ rng.normal(size=6) + rng.normal(size=150) > 0).astype(float)
    norms = [np.linalg.norm(fit_logistic(X, y, lam).weights) for lam in RIDGE_GRID]
    assert all(b <= a + 1e-6 for a, b in zip(norms, norms[1:]))


def test_row_permutation_invariance(rng):
    X = rng.normal(size=(120, 5))
    y = (X[:, 2] + rng.normal(size=120) > 0).astype(float)
    perm = rng.permutation(120)
    a = fit_logistic(X, y, 0.1)
    b = fit_logistic(X[perm], y[perm], 0.1)
    np.testing.assert_allclose(predict_logistic(a, X), predict_logistic(b, X), atol=1e-6)


def test_gradient_matches_finite_differences(rng):
    X = rng.normal(size=(30, 4))
    y = rng.integers(0, 2, 30).astype(float)
    w, b = rng.normal(size=4), 0.2
    _, gw, gb = logistic_loss_grad(w, b, X, y, 0.3)
    h = 1e-6
    for j in range(4):
        e = np.zeros(4)
        e[j] = h
        fd = (logistic_loss_grad(w + e, b, X, y, 0.3)[0] - logistic_loss_grad(w - e, b, X, y, 0.3)[0]) / (2 * h)
        assert gw[j] == pytest.approx(fd, abs=1e-8)
    fd = (logistic_loss_grad(w, b + h, X, y, 0.3)[0] - logistic_loss_grad(w, b - h, X, y, 0.3)[0]) / (2 * h)
    assert gb == pytest.approx(fd, abs=1e-8)


def test_predict_examples():
    assert predict_logistic(LogisticParams(np.zeros(3), 0.0), np.ones((4, 3))).tolist() == [0.5] * 4
    assert predict_logistic(LogisticParams(np.zeros(1), 100.0), np.ones((1, 1)))[0] == pytest.approx(1.0)
    assert predict_logistic(LogisticParams([1.0], 0.0), [[1.0]])[0] == pytest.approx(0.7311, abs=1e-4)
    # windows are flattened feature-major
    flat = predict_logistic(LogisticParams(np.arange(24.0) / 100, 0.0), np.ones((1, 2, 12)))
    assert flat[0] == pytest.approx(1 / (1 + np.exp(-2.76)))
    with pytest.raises(StructuralError):
        predict_logistic(LogisticParams(np.zeros(3), 0.0), np.ones((1, 2)))


def test_errors():
    with pytest.raises(DegenerateTargetError):
        fit_logistic(np.ones((5, 2)), np.zeros(5))
    with pytest.raises(StructuralError):
        fit_logistic(np.array([[np.nan], [1.0]]), np.array([0.0, 1.0]))
    with pytest.raises(StructuralError):
        LogisticParams(np.zeros(2), 0.0, ridge_lambda=-1)


def test_select_ridge_lambda(rng):
    n = 300
    X = rng.normal(size=(n, 30))
    y = (X[:, 0] + 0.5 * rng.normal(size=n) > 0.8).astype(float)
    with warnings.catch_warnings():
        warnings.simplefilter("error", ConvergenceWarning)
        lam, losses = select_ridge_lambda(X, y, blocked_cv_splits(n))
    assert lam in RIDGE_GRID
    assert set(losses) == set(RIDGE_GRID) and all(len(v) == 1 for v in losses.values())
    assert np.mean(losses[lam]) == min(np.mean(v) for v in losses.values())


def test_serialization(rng):
    p = fit_logistic(rng.normal(size=(40, 3)), np.r_[np.zeros(20), np.ones(20)], 0.01)
    data = logistic_bytes(p)
    back, meta = logistic_from_bytes(data)
    assert meta["architecture"] == "ridge"
    assert back.weights.tobytes() == p.weights.tobytes() and back.intercept == p.intercept
    assert logistic_bytes(back) == data
