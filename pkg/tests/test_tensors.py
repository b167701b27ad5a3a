import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from recessnet.errors import InsufficientDataError, ParameterError
from recessnet.tensors import (
    LOOKBACK,
    Horizon,
    SequenceTensor,
    align_supervised,
    batch_generator,
    blocked_cv_splits,
    first_block_length,
    horizon_to_steps,
)


class _Panel:
    def __init__(self, n, f=3):
        self.features = np.arange(n * f, dtype=float).reshape(n, f)
        self.months = np.arange(1000, 1000 + n)
        self.labels = np.arange(n) % 2


def test_horizon_mapping():
    assert horizon_to_steps() == {"Nowcast": 2, "Immediate": 3, "Short": 5, "Medium": 8, "Long": 14}
    assert Horizon.parse("short") is Horizon.Short
    with pytest.raises(ParameterError):
        Horizon.parse("soon")


def test_align_single_instance():
    p = _Panel(14)
    seq, y = align_supervised(p, Horizon.Nowcast)
    assert len(seq) == 1
    # rows 1..12 one-based, target row 14
    np.testing.assert_array_equal(seq.data[0], p.features[0:12].T)
    assert seq.batch_months.tolist() == [p.months[13]]
    assert y.tolist() == [p.labels[13]]


def test_align_boundary_and_error():
    seq, y = align_supervised(_Panel(13), "Nowcast")
    assert len(seq) == 0 and len(y) == 0
    with pytest.raises(InsufficientDataError):
        align_supervised(_Panel(12), "Nowcast")


@given(st.integers(30, 80), st.sampled_from(list(Horizon)))
def test_align_count_and_no_lookahead(n, h):
    p = _Panel(n)
    seq, y = align_supervised(p, h)
    assert len(seq) == n - 11 - h.steps_ahead
    assert seq.data.shape[1:] == (3, LOOKBACK)
    for i in (0, len(seq) - 1):
        target_row = int(seq.batch_months[i] - p.months[0])
        newest = seq.data[i, 0, -1]
        newest_row = int(newest // 3)
        assert newest_row == target_row - h.steps_ahead < target_row


def test_flattened_width_and_order():
    data = np.random.default_rng(0).normal(size=(2, 25, 12))
    flat = SequenceTensor(data, np.arange(2)).flattened()
    assert flat.shape == (2, 300)
    assert flat[1, 7 * 12 + 5] == data[1, 7, 5]
    with pytest.raises(ValueError):
        SequenceTensor(np.zeros((2, 3, 11)), np.arange(2))


def test_cv_splits_paper_sample():
    splits = blocked_cv_splits(476)
    assert [(s.train, s.validation) for s in splits] == [((0, 220), (220, 348)), ((0, 348), (348, 476))]
    assert first_block_length(476) == 220


def test_cv_splits_edges():
    with pytest.raises(InsufficientDataError):
        blocked_cv_splits(256)
    with pytest.raises(InsufficientDataError):
        blocked_cv_splits(200)
    splits = blocked_cv_splits(257)
    assert [(s.train, s.validation) for s in splits] == [((0, 129), (129, 257))]


@given(st.integers(257, 3000))
def test_cv_split_properties(n):
    splits = blocked_cv_splits(n)
    assert splits[0].train[1] > 128
    assert splits[-1].validation[1] == n
    covered = list(splits[0].train_indices)
    for a, b in zip(splits, splits[1:]):
        assert b.train[1] == a.validation[1]
    for s in splits:
        assert s.validation[1] - s.validation[0] == 128
        assert s.train_indices.max() < s.validation_indices.min()
        covered.extend(s.validation_indices)
    assert covered == list(range(n))
    assert blocked_cv_splits(n) == splits


def test_batch_generator():
    x = np.arange(10)
    sizes = [len(b) for b, _ in batch_generator(x, x, 4, shuffle_seed=1)]
    assert sizes == [4, 4, 2]
    got = np.concatenate([b for b, _ in batch_generator(x, x, 4, shuffle_seed=1)])
    assert sorted(got) == list(range(10))
    again = np.concatenate([b for b, _ in batch_generator(x, x, 4, shuffle_seed=1)])
    np.testing.assert_array_equal(got, again)
    whole = list(batch_generator(x, x * 2, 50))
    assert len(whole) == 1 and whole[0][0].tolist() == list(range(10))
    assert whole[0][1].tolist() == [2 * i for i in range(10)]
    with pytest.raises(ParameterError):
        next(batch_generator(x, x, 0))
