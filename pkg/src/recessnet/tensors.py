"""Supervised instances from a panel: 12-month windows, horizons, CV blocks."""

import enum
from dataclasses import dataclass

import numpy as np

from .errors import InsufficientDataError, ParameterError

LOOKBACK = 12
VALIDATION_BLOCK = 128


class Horizon(enum.Enum):
    """Forecast horizon; the value is the gap in months between the newest
    usable data row and the target month (two months of publication lag
    included)."""

    Nowcast = 2
    Immediate = 3
    Short = 5
    Medium = 8
    Long = 14

    @property
    def steps_ahead(self):
        return self.value

    @classmethod
    def parse(cls, text):
        if isinstance(text, cls):
            return text
        for h in cls:
            if h.name.lower() == str(text).strip().lower():
                return h
        raise ParameterError(f"unknown horizon {text!r}; choose from {[h.name for h in cls]}")


def horizon_to_steps():
    return {h.name: h.steps_ahead for h in Horizon}


@dataclass
class SequenceTensor:
    """Block of shape ``(batch, feature, timestep)`` plus the target months."""

    data: np.ndarray
    batch_months: np.ndarray

    def __post_init__(self):
        if self.data.ndim != 3 or self.data.shape[2] != LOOKBACK:
            raise ValueError(f"expected (batch, features, {LOOKBACK}), got {self.data.shape}")

    def __len__(self):
        return self.data.shape[0]

    def flattened(self):
        """``(batch, features * 12)`` view; column ``f * 12 + t``."""
        return self.data.reshape(self.data.shape[0], -1)


def window(features, end_row):
    """The 12 feature rows ending at ``end_row`` as a ``(features, 12)`` block."""
    start = end_row - LOOKBACK + 1
    if start < 0:
        raise InsufficientDataError(f"window ending at row {end_row} needs {LOOKBACK} rows")
    return np.ascontiguousarray(features[start : end_row + 1].T)


def align_supervised(panel, horizon):
    """Pair each target month with the 12 rows ending ``steps_ahead`` earlier.

    Instance count is ``n - 11 - steps_ahead``; the first instance targets
    row ``11 + steps_ahead``.
    """
    steps = Horizon.parse(horizon).steps_ahead
    x = np.asarray(panel.features, dtype=float)
    n = len(x)
    count = n - (LOOKBACK - 1) - steps
    if count < 0:
        raise InsufficientDataError(
            f"{n} rows cannot supply a {LOOKBACK}-month window {steps} steps ahead"
        )
    targets = np.arange(LOOKBACK - 1 + steps, n)
    # sliding windows: (n - 11, features, 12)
    windows = np.lib.stride_tricks.sliding_window_view(x, LOOKBACK, axis=0)
    data = np.ascontiguousarray(windows[: count])
    months = np.asarray(panel.months)[targets]
    return SequenceTensor(data, months), np.asarray(panel.labels)[targets].astype(float)


@dataclass(frozen=True)
class CvSplit:
    train: tuple
    validation: tuple

    @property
    def train_indices(self):
        return np.arange(*self.train)

    @property
    def validation_indices(self):
        return np.arange(*self.validation)


def first_block_length(n_total, block=VALIDATION_BLOCK):
    return n_total - block * (n_total // block - 1)


def blocked_cv_splits(n_total, block=VALIDATION_BLOCK):
    """Expanding-window splits with fixed 128-long validation blocks.

    The first training block has length ``n - 128 * (n // 128 - 1)`` and must
    be strictly longer than a validation block; each later split absorbs
    the previous validation block. The last block ends at ``n_total``.
    """
    n_total = int(n_total)
    if n_total < 2 * block:
        raise InsufficientDataError(f"blocked CV needs at least {2 * block} instances, got {n_total}")
    first = first_block_length(n_total, block)
    if first <= block:
        raise InsufficientDataError(
            f"n_total={n_total} gives a first training block of {first}, "
            f"not longer than the {block}-long validation block"
        )
    splits = []
    end = first
    while end < n_total:
        splits.append(CvSplit((0, end), (end, end + block)))
        end += block
    return splits


def batch_generator(data, targets, batch_size, shuffle_seed=None):
    """Yield ``(batch, targets)`` pairs covering every instance once.

    Instances (not timesteps) are permuted with ``shuffle_seed``; ``None``
    keeps the original order.
    """
    if batch_size < 1:
        raise ParameterError(f"batch_size must be >= 1, got {batch_size}")
    n = len(targets)
    order = np.arange(n)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(n)
    for start in range(0, n, batch_size):
        idx = order[start : start + batch_size]
        yield data[idx], targets[idx]
