"""Loss, Adam, early stopping and the epoch loop.

``fit`` works with anything exposing the small model protocol used by
:class:`recessnet.nn.Network`: ``params`` (dict of arrays), ``weight_keys``,
``forward(x, training, rng)`` returning a cache with ``prob``/``logit``,
``backward(cache, d_logit=...)``, ``predict(x)``, ``copy_params()``,
``set_params()`` and ``touch()``.
"""

import csv
from dataclasses import dataclass

import numpy as np

from .errors import DivergedTrainingError, InsufficientDataError, ParameterError, StructuralError
from .nn.activations import sigmoid

P_FLOOR = 1e-12
BETA1 = 0.9
BETA2 = 0.999
EPSILON = 1e-8
CLIP_NORM = 5.0
MIN_DELTA = 1e-6
PATIENCE = {"cv": 5, "final": 10}
MAX_EPOCHS = {"cv": 200, "final": 500}


def l2_penalty(params, keys, weight_decay):
    if weight_decay <= 0:
        return 0.0
    return float(weight_decay * sum(np.sum(params[k] ** 2) for k in keys))


def bce_loss(probabilities, labels, weight_decay=0.0, params=None, weight_keys=None):
    """Mean binary cross-entropy, plus ``weight_decay * sum(w**2)`` when asked.

    Probabilities are clamped to ``[1e-12, 1 - 1e-12]`` first.
    """
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    y = np.asarray(labels, dtype=float).reshape(-1)
    if p.shape != y.shape:
        raise StructuralError(f"{p.size} probabilities vs {y.size} labels")
    if p.size == 0:
        raise StructuralError("empty loss")
    p = np.clip(p, P_FLOOR, 1.0 - P_FLOOR)
    loss = -np.mean(y * np.log(p) + (1.0 - y) * np.log1p(-p))
    if weight_decay > 0 and params is not None:
        keys = weight_keys if weight_keys is not None else list(params)
        loss += l2_penalty(params, keys, weight_decay)
    return float(loss)


@dataclass
class AdamState:
    """Adam moments kept as flat vectors over the sorted parameter keys."""

    learning_rate: float = 0.001
    beta1: float = BETA1
    beta2: float = BETA2
    eps: float = EPSILON
    t: int = 0
    m: np.ndarray = None
    v: np.ndarray = None
    keys: tuple = ()

    @classmethod
    def for_params(cls, params, learning_rate=0.001):
        st = cls(learning_rate=learning_rate)
        st._init(params)
        return st

    def _init(self, params):
        self.keys = tuple(sorted(params))
        n = sum(params[k].size for k in self.keys)
        self.m = np.zeros(n)
        self.v = np.zeros(n)

    def moments(self, key, params):
        """``(m, v)`` for one parameter, shaped like it."""
        off = 0
        for k in self.keys:
            size = params[k].size
            if k == key:
                shape = params[k].shape
                return self.m[off : off + size].reshape(shape), self.v[off : off + size].reshape(shape)
            off += size
        raise KeyError(key)


def adam_update(params, grads, state, epoch=None):
    """One Adam step, updating ``params`` and ``state`` in place.

    Returns ``(params, state)`` for convenience.
    """
    if state.m is None:
        state._init(params)
    if set(grads) != set(state.keys):
        raise StructuralError(f"gradient keys {sorted(grads)} != parameter keys {list(state.keys)}")
    for k in state.keys:
        if grads[k].shape != params[k].shape:
            raise StructuralError(f"{k}: gradient shape {grads[k].shape} != {params[k].shape}")
    g = np.concatenate([grads[k].ravel() for k in state.keys])
    if not np.all(np.isfinite(g)):
        bad = [k for k in state.keys if not np.all(np.isfinite(grads[k]))]
        raise DivergedTrainingError(f"non-finite gradient for {', '.join(bad)}", epoch=epoch)
    state.t += 1
    b1, b2 = state.beta1, state.beta2
    c1 = 1.0 - b1**state.t
    c2 = 1.0 - b2**state.t
    state.m *= b1
    state.m += (1.0 - b1) * g
    state.v *= b2
    state.v += (1.0 - b2) * (g * g)
    step = state.learning_rate * (state.m / c1) / (np.sqrt(state.v / c2) + state.eps)
    off = 0
    for k in state.keys:
        p = params[k]
        p -= step[off : off + p.size].reshape(p.shape)
        off += p.size
    return params, state


def clip_global_norm(grads, max_norm=CLIP_NORM):
    norm = float(np.sqrt(sum(np.sum(g * g) for g in grads.values())))
    if norm > max_norm:
        scale = max_norm / norm
        for k in grads:
            grads[k] = grads[k] * scale
    return norm


class EarlyStopping:
    """Tracks the best validation loss and the parameters that produced it."""

    def __init__(self, patience, min_delta=MIN_DELTA):
        if patience < 1:
            raise ParameterError(f"patience must be >= 1, got {patience}")
        self.patience = int(patience)
        self.min_delta = float(min_delta)
        self.best_validation_loss = np.inf
        self.best_parameters = None
        self.best_epoch = None
        self.epochs_since_improvement = 0

    def update(self, epoch, val_loss, params):
        """Record one epoch; returns True when training should stop."""
        if val_loss < self.best_validation_loss - self.min_delta:
            self.best_validation_loss = float(val_loss)
            self.best_parameters = {k: v.copy() for k, v in params.items()}
            self.best_epoch = epoch
            self.epochs_since_improvement = 0
        else:
            self.epochs_since_improvement += 1
        return self.epochs_since_improvement >= self.patience


@dataclass
class TrainConfig:
    batch_size: int = 32
    learning_rate: float = 0.001
    weight_decay: float = 0.0
    max_epochs: int = 200
    patience: int = 5
    seed: int = 0
    clip_norm: float = CLIP_NORM
    min_delta: float = MIN_DELTA

    @classmethod
    def for_phase(cls, phase, batch_size, learning_rate, weight_decay, seed=0, max_epochs=None):
        if phase not in PATIENCE:
            raise ParameterError(f"phase must be 'cv' or 'final', got {phase!r}")
        return cls(
            batch_size=int(batch_size),
            learning_rate=float(learning_rate),
            weight_decay=float(weight_decay),
            max_epochs=int(max_epochs or MAX_EPOCHS[phase]),
            patience=PATIENCE[phase],
            seed=seed,
        )

    def validate(self):
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ParameterError("batch_size and max_epochs must be positive")
        if self.learning_rate <= 0 or self.weight_decay < 0:
            raise ParameterError("learning_rate must be > 0 and weight_decay >= 0")


@dataclass
class EpochRecord:
    epoch: int
    train_loss: float
    val_loss: float


@dataclass
class FitResult:
    model: object
    history: list
    best_epoch: int
    best_val_loss: float
    stopped_early: bool


def fit(model, train, validation, config, phase=None):
    """Train ``model`` on ``train = (X, y)`` with early stopping on ``validation``.

    ``phase`` ("cv" or "final") overrides the patience of ``config``.
    The returned model carries the parameters of the epoch with the lowest
    validation loss.
    """
    if phase is not None:
        if phase not in PATIENCE:
            raise ParameterError(f"phase must be 'cv' or 'final', got {phase!r}")
        config = TrainConfig(**{**config.__dict__, "patience": PATIENCE[phase]})
    config.validate()
    x_tr, y_tr = np.asarray(train[0], dtype=float), np.asarray(train[1], dtype=float)
    x_va, y_va = np.asarray(validation[0], dtype=float), np.asarray(validation[1], dtype=float)
    if len(y_tr) == 0 or len(y_va) == 0:
        raise InsufficientDataError("training and validation splits must be non-empty")
    if len(x_tr) != len(y_tr) or len(x_va) != len(y_va):
        raise StructuralError("inputs and targets differ in length")

    rng = np.random.default_rng(config.seed)
    adam = AdamState.for_params(model.params, config.learning_rate)
    stopper = EarlyStopping(config.patience, config.min_delta)
    keys = model.weight_keys
    lam = config.weight_decay
    history = []
    n = len(y_tr)
    stopped = False
    for epoch in range(1, config.max_epochs + 1):
        order = rng.permutation(n)
        total = 0.0
        for s in range(0, n, config.batch_size):
            idx = order[s : s + config.batch_size]
            yb = y_tr[idx]
            cache = model.forward(x_tr[idx], training=True, rng=rng)
            p = np.clip(cache.prob, P_FLOOR, 1.0 - P_FLOOR)
            total += -np.sum(yb * np.log(p) + (1.0 - yb) * np.log1p(-p))
            grads = model.backward(cache, d_logit=(sigmoid(cache.logit) - yb) / len(idx))
            if lam > 0:
                for k in keys:
                    grads[k] = grads[k] + 2.0 * lam * model.params[k]
            try:
                clip_global_norm(grads, config.clip_norm)
                adam_update(model.params, grads, adam, epoch=epoch)
            except DivergedTrainingError as exc:
                raise DivergedTrainingError(str(exc), epoch=epoch, history=history) from None
            model.touch()
        train_loss = total / n + l2_penalty(model.params, keys, lam)
        val_loss = bce_loss(model.predict(x_va), y_va)
        history.append(EpochRecord(epoch, float(train_loss), val_loss))
        if not (np.isfinite(train_loss) and np.isfinite(val_loss)):
            raise DivergedTrainingError(f"non-finite loss at epoch {epoch}", epoch=epoch, history=history)
        if stopper.update(epoch, val_loss, model.params):
            stopped = True
            break
    model.set_params(stopper.best_parameters)
    return FitResult(model, history, stopper.best_epoch, stopper.best_validation_loss, stopped)


def write_history(path, history):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["epoch", "train_loss", "val_loss"])
        for r in history:
            w.writerow([r.epoch, repr(r.train_loss), repr(r.val_loss)])
