"""Stationarity transforms and daily-to-monthly aggregation."""

from collections import defaultdict

import numpy as np

from ..errors import DomainError, InsufficientDataError
from ..months import format_month, parse_month
from .catalog import Transform


def transform_series(values, kind, name="series", months=None):
    """Apply a stationarity transform, returning ``len(values) - 1`` values.

    NaN gaps propagate to the adjacent differences. ``months`` (ordinals,
    aligned with ``values``) is only used to name the offending month in
    domain errors.
    """
    kind = Transform(kind)
    x = np.asarray(values, dtype=float)
    if x.ndim != 1 or x.size < 2:
        raise InsufficientDataError(f"{name}: need at least 2 observations, got {x.size}")
    if kind is Transform.FirstDifference:
        return x[1:] - x[:-1]
    bad = np.flatnonzero(~np.isnan(x) & (x <= 0))
    if bad.size:
        i = int(bad[0])
        where = format_month(months[i]) if months is not None else f"index {i}"
        raise DomainError(f"{name}: {kind.value} needs positive values, got {x[i]!r} at {where}")
    if kind is Transform.PercentChange:
        return (x[1:] - x[:-1]) / x[:-1]
    logx = np.log(x)
    return logx[1:] - logx[:-1]


def aggregate_daily_to_monthly(daily):
    """Average daily observations within each calendar month.

    ``daily`` is an iterable of ``(date, value)``; dates may be month
    ordinals or ``YYYY-MM[-DD]`` strings. Returns ``[(month, mean), ...]``
    ordered by month.
    """
    buckets = defaultdict(list)
    for date, value in daily:
        month = parse_month(date) if isinstance(date, str) else int(date)
        buckets[month].append(float(value))
    return [(m, float(np.mean(buckets[m]))) for m in sorted(buckets)]
