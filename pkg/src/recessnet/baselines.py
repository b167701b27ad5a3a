"""Plain and ridge-penalized logistic regression on flattened windows."""

import warnings
from dataclasses import dataclass

import numpy as np

from .errors import DegenerateTargetError, StructuralError
from .nn.activations import clip_probability, sigmoid
from .nn.serialize import dumps, loads
from .training import AdamState, adam_update, bce_loss

RIDGE_GRID = (0.001, 0.01, 0.1, 1.0, 10.0)
GRAD_TOL = 1e-8
MAX_ITER = 10_000


class ConvergenceWarning(UserWarning):
    pass


@dataclass
class LogisticParams:
    weights: np.ndarray
    intercept: float
    ridge_lambda: float = 0.0
    iterations: int = 0
    converged: bool = True

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=float).reshape(-1)
        self.intercept = float(self.intercept)
        if self.ridge_lambda < 0:
            raise StructuralError("ridge_lambda must be non-negative")
        if not (np.all(np.isfinite(self.weights)) and np.isfinite(self.intercept)):
            raise StructuralError("logistic parameters must be finite")

    @property
    def kind(self):
        return "ridge" if self.ridge_lambda > 0 else "logit"

    def n_params(self):
        return self.weights.size + 1


def _as_matrix(X):
    X = np.asarray(X, dtype=float)
    if X.ndim == 3:
        X = X.reshape(len(X), -1)
    if X.ndim != 2:
        raise StructuralError(f"expected a 2-D design matrix, got shape {X.shape}")
    return X


def logistic_loss_grad(w, b, X, y, lam):
    """Mean BCE + lam * |w|^2 and its gradient (intercept unpenalized)."""
    z = X @ w + b
    p = sigmoid(z)
    r = (p - y) / len(y)
    # log(1 + e^z) - y z, overflow-free
    loss = np.mean(np.logaddexp(0.0, z) - y * z) + lam * (w @ w)
    return loss, X.T @ r + 2.0 * lam * w, r.sum()


def fit_logistic(X, y, lam=0.0, learning_rate=0.01, tol=GRAD_TOL, max_iter=MAX_ITER):
    """Minimize mean BCE + ``lam * |w|^2`` with full-batch Adam.

    Stops once the gradient norm drops below ``tol`` or after ``max_iter``
    steps; the second case issues a :class:`ConvergenceWarning`.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float).reshape(-1)
    if len(X) != len(y):
        raise StructuralError(f"{len(X)} rows vs {len(y)} targets")
    if len(y) < 2 or np.all(y == y[0]):
        raise DegenerateTargetError("logistic regression needs both classes in the targets")
    if not np.all(np.isfinite(X)):
        raise StructuralError("design matrix has missing or non-finite values")
    base = y.mean()
    params = {"w": np.zeros(X.shape[1]), "b": np.array([np.log(base / (1.0 - base))])}
    state = AdamState.for_params(params, learning_rate)
    converged = False
    it = 0
    for it in range(1, max_iter + 1):
        _, gw, gb = logistic_loss_grad(params["w"], params["b"][0], X, y, lam)
        if np.sqrt(gw @ gw + gb * gb) < tol:
            converged = True
            it -= 1
            break
        adam_update(params, {"w": gw, "b": np.array([gb])}, state)
    if not converged:
        warnings.warn(
            f"logistic fit (lambda={lam}) stopped after {max_iter} iterations "
            "without reaching the gradient tolerance",
            ConvergenceWarning,
            stacklevel=2,
        )
    return LogisticParams(params["w"], params["b"][0], lam, it, converged)


def predict_logistic(params, X):
    X = _as_matrix(X)
    if X.shape[1] != params.weights.size:
        raise StructuralError(f"width {X.shape[1]} != {params.weights.size} weights")
    return clip_probability(sigmoid(X @ params.weights + params.intercept))


def select_ridge_lambda(X, y, splits, grid=RIDGE_GRID):
    """Pick the ridge strength with the lowest mean validation BCE.

    Returns ``(lambda, {lambda: [per-split losses]})``; ties go to the
    earlier grid entry.
    """
    X = _as_matrix(X)
    y = np.asarray(y, dtype=float)
    losses = {}
    for lam in grid:
        per = []
        for sp in splits:
            tr, va = sp.train_indices, sp.validation_indices
            with warnings.catch_warnings():
                warnings.simplefilter("ignore", ConvergenceWarning)
                fitted = fit_logistic(X[tr], y[tr], lam)
            per.append(bce_loss(predict_logistic(fitted, X[va]), y[va]))
        losses[lam] = per
    best = min(grid, key=lambda lam: (np.mean(losses[lam]), grid.index(lam)))
    return best, losses


def logistic_bytes(params, extra=None):
    meta = {
        "architecture": params.kind,
        "config": {"ridge_lambda": params.ridge_lambda, "n_features": int(params.weights.size)},
    }
    if extra:
        meta["extra"] = extra
    return dumps({"weights": params.weights, "intercept": np.array([params.intercept])}, meta)


def logistic_from_bytes(data):
    arrays, meta = loads(data)
    if meta.get("architecture") not in ("logit", "ridge"):
        raise StructuralError(f"not a logistic model file: {meta.get('architecture')!r}")
    lam = float(meta["config"]["ridge_lambda"])
    return LogisticParams(arrays["weights"], float(arrays["intercept"][0]), lam), meta
