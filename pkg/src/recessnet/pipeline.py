"""Random hyperparameter search, final fits and quasi-recursive forecasting."""

import csv
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from .baselines import ConvergenceWarning, fit_logistic, predict_logistic, select_ridge_lambda
from .data.panel import build_panel
from .errors import (
    DivergedTrainingError,
    ParameterError,
    SearchFailedError,
    VintageGapError,
)
from .months import format_month
from .nn.network import KINDS as NN_KINDS
from .nn.network import Network
from .tensors import Horizon, align_supervised, blocked_cv_splits, window
from .training import TrainConfig, fit

BASELINE_KINDS = ("logit", "ridge")
MODEL_KINDS = NN_KINDS + BASELINE_KINDS
THRESHOLD = 0.5
REESTIMATION_PERIOD = 12
DEFAULT_TRIALS = 60

# draw order matters: every trial consumes one index per field, in this order
SEARCH_SPACE = {
    "hidden_layers": (1, 2),
    "units": (16, 32, 64),
    "batch_size": (16, 32, 64),
    "dropout": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
    "recurrent_dropout": (0.0, 0.1, 0.2, 0.3, 0.4, 0.5),
    "weight_decay": (0.0, 0.1, 0.2),
    "learning_rate": (0.01, 0.001),
}


def derive_seed(master, *path):
    """Counter-based child seed: the same ``(master, path)`` always maps to
    the same 63-bit integer, independent of scheduling."""
    ss = np.random.SeedSequence(int(master), spawn_key=tuple(int(p) for p in path))
    return int(ss.generate_state(1, dtype=np.uint64)[0] >> np.uint64(1))


@dataclass(frozen=True)
class HyperparameterConfig:
    hidden_layers: int = 1
    units: int = 32
    batch_size: int = 32
    dropout: float = 0.0
    recurrent_dropout: float = 0.0
    weight_decay: float = 0.0
    learning_rate: float = 0.001

    def validate(self, space=None):
        space = SEARCH_SPACE if space is None else space
        for name, allowed in space.items():
            if getattr(self, name) not in allowed:
                raise ParameterError(f"{name}={getattr(self, name)!r} not in {allowed}")
        return self

    def as_dict(self):
        return asdict(self)


def sample_config(rng, space=None):
    space = SEARCH_SPACE if space is None else space
    values = {name: opts[int(rng.integers(len(opts)))] for name, opts in space.items()}
    return HyperparameterConfig(**values)


def build_network(kind, n_features, config, seed):
    # recurrent dropout has no meaning for a feed-forward net
    rec = config.recurrent_dropout if kind != "ffn" else 0.0
    return Network(
        kind, n_features, config.units, config.hidden_layers, config.dropout, rec, seed=seed
    )


def count_params(kind, n_features, config):
    return build_network(kind, n_features, config, seed=0).n_params()


@dataclass
class TrialResult:
    index: int
    config: HyperparameterConfig
    split_losses: list
    seed: int
    n_params: int = 0
    epochs: list = field(default_factory=list)
    diverged: bool = False

    @property
    def mean_validation_loss(self):
        if self.diverged or not self.split_losses:
            return float("inf")
        return float(np.mean(self.split_losses))


@dataclass
class SearchResult:
    best: HyperparameterConfig
    best_index: int
    trials: list
    seed: int


def run_trial(kind, X, y, splits, config, seed, max_epochs=None):
    """Fit one configuration on every CV split; returns (losses, epochs)."""
    losses, epochs = [], []
    for s, sp in enumerate(splits):
        tr, va = sp.train_indices, sp.validation_indices
        net = build_network(kind, X.shape[1], config, derive_seed(seed, s, 0))
        cfg = TrainConfig.for_phase(
            "cv", config.batch_size, config.learning_rate, config.weight_decay,
            seed=derive_seed(seed, s, 1), max_epochs=max_epochs,
        )
        res = fit(net, (X[tr], y[tr]), (X[va], y[va]), cfg)
        losses.append(res.best_val_loss)
        epochs.append(len(res.history))
    return losses, epochs


def _trial_job(args):
    kind, X, y, splits, config, seed, max_epochs = args
    try:
        return run_trial(kind, X, y, splits, config, seed, max_epochs), False
    except DivergedTrainingError:
        return ([], []), True


def random_search(kind, X, y, trials=DEFAULT_TRIALS, seed=0, space=None, trial_fn=None,
                  n_jobs=1, max_epochs=None):
    """Uniform random search over the hyperparameter grid with blocked CV.

    ``trial_fn(config, index, seed)``, when given, replaces training and
    must return the per-split validation losses (a test hook). The winner
    has the lowest mean validation loss; ties go to fewer parameters, then
    to the earlier draw.
    """
    if kind not in NN_KINDS:
        raise ParameterError(f"random search applies to {NN_KINDS}, not {kind!r}")
    if trials < 1:
        raise ParameterError("trials must be >= 1")
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    splits = blocked_cv_splits(len(y))
    rng = np.random.default_rng(derive_seed(seed, 0))
    configs = [sample_config(rng, space) for _ in range(trials)]
    seeds = [derive_seed(seed, 1, t) for t in range(trials)]

    if trial_fn is not None:
        outcomes = []
        for t, (c, s) in enumerate(zip(configs, seeds)):
            try:
                losses = trial_fn(c, t, s)
                losses = [float(losses)] if np.isscalar(losses) else [float(v) for v in losses]
                outcomes.append(((losses, []), not np.all(np.isfinite(losses))))
            except DivergedTrainingError:
                outcomes.append((([], []), True))
    else:
        jobs = [(kind, X, y, splits, c, s, max_epochs) for c, s in zip(configs, seeds)]
        if n_jobs > 1:
            with ProcessPoolExecutor(n_jobs) as pool:
                outcomes = list(pool.map(_trial_job, jobs))
        else:
            outcomes = [_trial_job(j) for j in jobs]

    results = []
    for t, (c, s, ((losses, epochs), diverged)) in enumerate(zip(configs, seeds, outcomes)):
        results.append(
            TrialResult(t, c, losses, s, count_params(kind, X.shape[1], c), epochs, diverged)
        )
    live = [r for r in results if not r.diverged]
    if not live:
        raise SearchFailedError(f"all {trials} trials diverged", trials=results)
    best = min(live, key=lambda r: (r.mean_validation_loss, r.n_params, r.index))
    return SearchResult(best.config, best.index, results, seed)


def final_split_point(n):
    """Training length of the final fit: the last CV split's proportion."""
    return blocked_cv_splits(n)[-1].train[1]


def final_fit(kind, X, y, config, seed=0, max_epochs=None):
    """Refit the winning configuration on the whole sample with a chronological
    hold-out (patience 10). Returns the training result."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    cut = final_split_point(len(y))
    net = build_network(kind, X.shape[1], config, derive_seed(seed, 0))
    cfg = TrainConfig.for_phase(
        "final", config.batch_size, config.learning_rate, config.weight_decay,
        seed=derive_seed(seed, 1), max_epochs=max_epochs,
    )
    return fit(net, (X[:cut], y[:cut]), (X[cut:], y[cut:]), cfg)


@dataclass(frozen=True)
class ForecastRecord:
    target_month: int
    horizon: str
    vintage_date: int
    probability: float
    call: int
    model_kind: str
    generation: int
    seed: int


@dataclass
class Generation:
    index: int
    reestimation_month: int
    training_vintage: int
    seed: int
    model: object
    config: object = None
    search: SearchResult = None
    stats: object = None
    train_x: np.ndarray = None
    train_months: np.ndarray = None
    predict_x: np.ndarray = None
    predict_months: np.ndarray = None
    history: list = field(default_factory=list)


class FittedModel:
    """Uniform ``predict(X)`` over networks and logistic baselines."""

    def __init__(self, kind, model):
        self.kind = kind
        self.model = model

    def predict(self, X):
        X = np.asarray(X, dtype=float)
        if self.kind in BASELINE_KINDS:
            return predict_logistic(self.model, X.reshape(len(X), -1))
        return self.model.predict(X)


def fit_generation(kind, X, y, seed, trials=DEFAULT_TRIALS, space=None, n_jobs=1,
                   max_epochs=None, trial_fn=None):
    """Tune and fit one model on one training sample.

    Returns ``(FittedModel, config, search, history)``.
    """
    flat = X.reshape(len(X), -1)
    if kind == "logit":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", ConvergenceWarning)
            params = fit_logistic(flat, y, 0.0)
        return FittedModel(kind, params), {"ridge_lambda": 0.0}, None, []
    if kind == "ridge":
        lam, losses = select_ridge_lambda(flat, y, blocked_cv_splits(len(y)))
        params = fit_logistic(flat, y, lam)
        return FittedModel(kind, params), {"ridge_lambda": lam, "cv_losses": losses}, None, []
    search = random_search(kind, X, y, trials, derive_seed(seed, 0), space, trial_fn,
                           n_jobs, max_epochs)
    res = final_fit(kind, X, y, search.best, derive_seed(seed, 1), max_epochs)
    return FittedModel(kind, res.model), search.best, search, res.history


def prediction_vintage(target_month, horizon):
    """Vintage whose newest usable row is ``steps`` months before the target
    (observations trail their vintage by two months)."""
    return target_month - (Horizon.parse(horizon).steps_ahead - 2)


def recursive_forecast(archive, catalog, kind, horizon, start, end, seed=0,
                       trials=DEFAULT_TRIALS, space=None, n_jobs=1, max_epochs=None,
                       period=REESTIMATION_PERIOD, trial_fn=None, progress=None,
                       threshold=THRESHOLD):
    """Real-time out-of-sample forecasts for target months ``start..end``.

    Every ``period`` months the model is re-tuned and re-fitted on the
    vintage available when the first forecast of the window is made; that
    model then serves the next ``period`` target months, each built from
    the vintage current at its prediction time. Returns
    ``(records, generations)``.
    """
    if kind not in MODEL_KINDS:
        raise ParameterError(f"unknown model kind {kind!r}; choose from {MODEL_KINDS}")
    h = Horizon.parse(horizon)
    steps = h.steps_ahead
    if end < start:
        raise ParameterError("out-of-sample end precedes its start")
    records, generations = [], []
    for g, gen_start in enumerate(range(start, end + 1, period)):
        targets = np.arange(gen_start, min(gen_start + period, end + 1))
        train_vintage = prediction_vintage(gen_start, h)
        gen_seed = derive_seed(seed, g)
        if progress:
            progress(kind, h.name, g, format_month(gen_start))
        panel = build_panel(archive.get(train_vintage), catalog)
        seq, y = align_supervised(panel, h)
        model, config, search, history = fit_generation(
            kind, seq.data, y, gen_seed, trials, space, n_jobs, max_epochs, trial_fn
        )
        xs = []
        vintages = []
        for t in targets:
            pv = int(prediction_vintage(t, h))
            try:
                frame = archive.get(pv)
            except VintageGapError:
                raise VintageGapError(
                    f"no vintage {format_month(pv)} to forecast {format_month(t)} ({h.name})"
                ) from None
            p_panel = build_panel(frame, catalog, stats=panel.stats)
            end_row = p_panel.row_of(t - steps)
            xs.append(window(p_panel.features, end_row))
            vintages.append(pv)
        xs = np.stack(xs)
        probs = model.predict(xs)
        for t, pv, p in zip(targets, vintages, probs):
            records.append(
                ForecastRecord(int(t), h.name, pv, float(p), int(p >= threshold), kind, g, gen_seed)
            )
        generations.append(
            Generation(g, int(gen_start), int(train_vintage), gen_seed, model, config, search,
                       panel.stats, seq.data, seq.batch_months, xs, targets, history)
        )
    return records, generations


FORECAST_HEADER = ["target_month", "horizon", "model", "probability", "call", "vintage",
                   "generation", "seed"]


def write_forecasts(path, records):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(FORECAST_HEADER)
        for r in records:
            w.writerow([format_month(r.target_month), r.horizon, r.model_kind,
                        repr(r.probability), r.call, format_month(r.vintage_date),
                        r.generation, r.seed])


def read_forecasts(path):
    from .months import parse_month

    out = []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            out.append(ForecastRecord(
                parse_month(row["target_month"]), row["horizon"], parse_month(row["vintage"]),
                float(row["probability"]), int(row["call"]), row["model"],
                int(row["generation"]), int(row["seed"]),
            ))
    return out


def write_trials(path, search):
    names = list(SEARCH_SPACE)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["trial", *names, "n_params", "mean_validation_loss", "split_losses", "seed"])
        for r in search.trials:
            w.writerow([r.index, *[getattr(r.config, n) for n in names], r.n_params,
                        repr(r.mean_validation_loss), ";".join(repr(v) for v in r.split_losses),
                        r.seed])


__all__ = [
    "BASELINE_KINDS",
    "FORECAST_HEADER",
    "ForecastRecord",
    "FittedModel",
    "Generation",
    "HyperparameterConfig",
    "MODEL_KINDS",
    "SEARCH_SPACE",
    "SearchResult",
    "TrialResult",
    "derive_seed",
    "final_fit",
    "final_split_point",
    "recursive_forecast",
    "random_search",
    "read_forecasts",
    "write_forecasts",
    "write_trials",
]
