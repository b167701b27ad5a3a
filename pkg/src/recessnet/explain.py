"""KernelSHAP and LIME attributions over flattened (feature, timestep) inputs.

Both explainers treat the model as a black box ``f(rows) -> probabilities``
over 2-D inputs; :func:`flat_model` adapts a model that expects
``(batch, features, 12)`` blocks.
"""

import csv
import itertools
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import rankdata
from sklearn.linear_model import Lasso

from .errors import (
    ConstantColumnError,
    ParameterError,
    RankDeficiencyError,
    StructuralError,
    UndefinedMetricError,
)
from .months import format_month
from .nn.activations import sigmoid

N_COALITIONS = 2048
BACKGROUND_SIZE = 100


def flat_model(predict, n_features, lookback=12):
    """Wrap ``predict`` on ``(n, F, T)`` blocks as a function of ``(n, F*T)`` rows."""
    def f(rows):
        rows = np.asarray(rows, dtype=float)
        return np.asarray(predict(rows.reshape(len(rows), n_features, lookback)), dtype=float)

    return f


def sample_background(rows, size=BACKGROUND_SIZE, seed=0):
    """Uniform draw without replacement from training rows (all of them if fewer)."""
    rows = np.asarray(rows, dtype=float)
    if len(rows) == 0:
        raise StructuralError("background set must be non-empty")
    rows = rows.reshape(len(rows), -1)
    if len(rows) <= size:
        return rows.copy()
    idx = np.sort(np.random.default_rng(seed).choice(len(rows), size, replace=False))
    return rows[idx]


def shapley_kernel_weight(K, s):
    return (K - 1) / (math.comb(K, s) * s * (K - s))


def _coalitions(K, budget, rng):
    """Coalition masks and regression weights (both extremes excluded)."""
    if 2**K - 2 <= budget:
        rows = [np.array(z, dtype=bool) for z in itertools.product((0, 1), repeat=K)]
        masks = np.array([z for z in rows if 0 < z.sum() < K])
        sizes = masks.sum(axis=1)
        w = np.array([shapley_kernel_weight(K, int(s)) for s in sizes])
        return masks, w, True
    sizes = np.arange(1, K)
    mass = (K - 1) / (sizes * (K - sizes))
    q = mass / mass.sum()
    half = budget // 2
    masks = np.zeros((2 * half, K), dtype=bool)
    drawn = rng.choice(sizes, size=half, p=q)
    for i, s in enumerate(drawn):
        pick = rng.choice(K, size=int(s), replace=False)
        masks[2 * i, pick] = True
        masks[2 * i + 1] = ~masks[2 * i]
    # sizes are drawn in proportion to their kernel mass, so every sampled
    # coalition carries the same regression weight
    return masks, np.ones(len(masks)), False


def coalition_values(f, x, background, masks, chunk=32):
    """Mean prediction over background rows with the coalition taken from ``x``."""
    out = np.empty(len(masks))
    B = len(background)
    for s in range(0, len(masks), chunk):
        m = masks[s : s + chunk]
        block = np.where(m[:, None, :], x[None, None, :], background[None, :, :])
        pred = f(block.reshape(-1, len(x)))
        out[s : s + chunk] = np.asarray(pred, dtype=float).reshape(len(m), B).mean(axis=1)
    return out


@dataclass
class ShapResult:
    values: np.ndarray
    base_value: float
    prediction: float
    exact: bool
    n_coalitions: int


def kernel_shap(f, instance, background, n_coalitions=N_COALITIONS, seed=0):
    """Shapley values of ``f`` at ``instance`` by constrained weighted regression.

    Small inputs (``2**K - 2 <= n_coalitions``) are enumerated exactly;
    otherwise coalitions are sampled in complementary pairs. Attributions
    always sum to ``f(instance) - base_value``.
    """
    x = np.asarray(instance, dtype=float).reshape(-1)
    bg = np.asarray(background, dtype=float)
    bg = bg.reshape(len(bg), -1)
    K = x.size
    if bg.shape[1] != K:
        raise StructuralError(f"background width {bg.shape[1]} != instance width {K}")
    if n_coalitions < K + 2:
        raise ParameterError(f"n_coalitions must be at least K + 2 = {K + 2}")
    if 2**K > n_coalitions and n_coalitions < 2 * K:
        # a complementary pair contributes one direction once efficiency is imposed
        raise ParameterError(f"sampled coalitions need n_coalitions >= 2K = {2 * K}")
    fx = float(np.asarray(f(x[None]), dtype=float).reshape(-1)[0])
    base = float(np.mean(f(bg)))
    if K == 1:
        return ShapResult(np.array([fx - base]), base, fx, True, 2)
    rng = np.random.default_rng(seed)
    masks, w, exact = _coalitions(K, n_coalitions - 2, rng)
    v = coalition_values(f, x, bg, masks)
    z = masks.astype(float)
    total = fx - base
    # eliminate the last attribution through the efficiency constraint
    target = v - base - z[:, -1] * total
    design = z[:, :-1] - z[:, -1:]
    sw = np.sqrt(w)
    coef, _, rank, _ = np.linalg.lstsq(design * sw[:, None], target * sw, rcond=None)
    if rank < K - 1:
        raise RankDeficiencyError(
            f"coalition design has rank {rank} < {K - 1}; increase n_coalitions"
        )
    phi = np.r_[coef, total - coef.sum()]
    return ShapResult(phi, base, fx, exact, len(masks) + 2)


@dataclass
class LimeResult:
    weights: np.ndarray
    intercept: float
    kept: np.ndarray
    kernel_width: float
    sample_weights: np.ndarray = field(repr=False, default=None)


def lime_explain(f, instance, mean, sd, n_samples=5000, kernel_width=None, n_kept=10,
                 alpha=1e-4, seed=0, names=None):
    """Sparse local linear surrogate of ``f`` around ``instance``.

    Perturbations are Normal(``mean``, ``sd``) per input; proximity weights
    are ``exp(-d**2 / width**2)`` with ``d`` the Euclidean distance in
    standardized units. The Lasso runs in standardized units and the
    returned ``weights`` are per original unit, zero outside ``kept``.
    """
    x = np.asarray(instance, dtype=float).reshape(-1)
    mean = np.asarray(mean, dtype=float).reshape(-1)
    sd = np.asarray(sd, dtype=float).reshape(-1)
    K = x.size
    if mean.size != K or sd.size != K:
        raise StructuralError("mean and sd must match the instance width")
    if n_samples < 10 * n_kept:
        raise ParameterError(f"n_samples must be at least 10 * n_kept = {10 * n_kept}")
    flat = np.flatnonzero(~(sd > 0))
    if flat.size:
        label = [names[j] if names is not None else str(j) for j in flat[:10]]
        raise ConstantColumnError(f"zero perturbation variance for inputs {', '.join(label)}")
    width = float(kernel_width) if kernel_width is not None else 0.75 * math.sqrt(K)
    rng = np.random.default_rng(seed)
    Z = rng.normal(mean, sd, size=(n_samples, K))
    Z[0] = x
    Zs = (Z - mean) / sd
    xs = (x - mean) / sd
    d2 = np.sum((Zs - xs) ** 2, axis=1)
    sw = np.exp(-d2 / width**2)
    yv = np.asarray(f(Z), dtype=float).reshape(-1)
    model = Lasso(alpha=alpha, max_iter=50_000, tol=1e-10)
    model.fit(Zs, yv, sample_weight=sw)
    coef_std = model.coef_.copy()
    kept = np.sort(np.argsort(-np.abs(coef_std), kind="stable")[:n_kept])
    keep = np.zeros(K, dtype=bool)
    keep[kept] = True
    coef_std[~keep] = 0.0
    weights = coef_std / sd
    intercept = float(model.intercept_ - np.sum(coef_std * mean / sd))
    return LimeResult(weights, intercept, kept, width, sw)


@dataclass
class AttributionMatrix:
    values: np.ndarray
    method: str
    base_value: np.ndarray = None
    months: np.ndarray = None
    names: tuple = ()

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        if self.values.ndim != 3:
            raise StructuralError(f"attributions must be (instances, features, timesteps), got {self.values.shape}")


def explain_instances(f, instances, background, method="SHAP", seed=0,
                      n_coalitions=N_COALITIONS, lime_kwargs=None, months=None, names=()):
    """Attribute every instance of a ``(N, F, T)`` block."""
    inst = np.asarray(instances, dtype=float)
    N, F, T = inst.shape
    vals = np.empty((N, F * T))
    base = np.empty(N)
    bg = np.asarray(background, dtype=float).reshape(len(background), -1)
    for i in range(N):
        if method == "SHAP":
            r = kernel_shap(f, inst[i].reshape(-1), bg, n_coalitions, seed=seed + i)
            vals[i] = r.values
            base[i] = r.base_value
        elif method == "LIME":
            kw = dict(lime_kwargs or {})
            r = lime_explain(f, inst[i].reshape(-1), bg.mean(axis=0), bg.std(axis=0),
                             seed=seed + i, **kw)
            vals[i] = r.weights
            base[i] = r.intercept
        else:
            raise ParameterError(f"unknown attribution method {method!r}")
    return AttributionMatrix(vals.reshape(N, F, T), method, base, months, tuple(names))


def aggregate_importance(attr):
    """Mean absolute attribution per feature over instances and timesteps.

    Returns ``(importance, rank)`` with rank 1 for the most important
    feature (ties keep feature order).
    """
    values = attr.values if isinstance(attr, AttributionMatrix) else np.asarray(attr, dtype=float)
    if values.size == 0:
        raise StructuralError("empty attribution block")
    imp = np.abs(values).mean(axis=(0, 2))
    order = np.argsort(-imp, kind="stable")
    rank = np.empty(len(imp), dtype=int)
    rank[order] = np.arange(1, len(imp) + 1)
    return imp, rank


def spearman_rank_corr(a, b):
    a = np.asarray(a, dtype=float).reshape(-1)
    b = np.asarray(b, dtype=float).reshape(-1)
    if a.size != b.size or a.size < 2:
        raise StructuralError("need two equal-length vectors of length >= 2")
    ra = rankdata(a)
    rb = rankdata(b)
    if np.all(ra == ra[0]) or np.all(rb == rb[0]):
        raise UndefinedMetricError("rank correlation undefined for a constant vector")
    return float(np.corrcoef(ra, rb)[0, 1])


def marginal_effects(params, X, n_features=None):
    """Average marginal effect ``w_j * mean(p (1 - p))`` per input.

    Returns the per-input vector and, when ``n_features`` is given, its
    per-feature collapse (mean of absolute values over timesteps).
    """
    X = np.asarray(X, dtype=float)
    X = X.reshape(len(X), -1)
    p = sigmoid(X @ params.weights + params.intercept)
    eff = params.weights * float(np.mean(p * (1.0 - p)))
    if n_features is None:
        return eff, None
    return eff, np.abs(eff.reshape(n_features, -1)).mean(axis=1)


def dependence_data(attr, feature, feature_values):
    """``(x, attribution)`` pairs for one feature, one per instance and
    timestep, sorted by ``x``."""
    values = attr.values if isinstance(attr, AttributionMatrix) else np.asarray(attr, dtype=float)
    xv = np.asarray(feature_values, dtype=float)
    if values.size == 0:
        return []
    if xv.shape != values.shape:
        raise StructuralError(f"feature values {xv.shape} do not match attributions {values.shape}")
    xs = xv[:, feature, :].reshape(-1)
    ys = values[:, feature, :].reshape(-1)
    order = np.argsort(xs, kind="stable")
    return [(float(xs[i]), float(ys[i])) for i in order]


def write_attributions(path, attr):
    N, F, T = attr.values.shape
    names = attr.names or tuple(f"x{j}" for j in range(F))
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["instance_month", "feature", "timestep", "value", "method"])
        for i in range(N):
            month = format_month(attr.months[i]) if attr.months is not None else str(i)
            for j in range(F):
                for t in range(T):
                    w.writerow([month, names[j], t + 1, repr(float(attr.values[i, j, t])), attr.method])


def write_importance(path, names, importance, rank):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["feature", "importance", "rank"])
        for n, v, r in sorted(zip(names, importance, rank), key=lambda t: t[2]):
            w.writerow([n, repr(float(v)), int(r)])
