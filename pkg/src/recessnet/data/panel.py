"""Assemble a vintage into a complete, standardized monthly panel."""

from dataclasses import dataclass, field

import numpy as np

from ..errors import ConstantColumnError, InsufficientDataError
from ..months import format_month
from .catalog import Frequency
from .impute import DEFAULT_K, impute_knn
from .labels import build_realtime_labels
from .spline import interpolate_quarterly_to_monthly
from .transforms import transform_series
from .vintage import check_catalog_coverage


@dataclass(frozen=True)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    fit_range: tuple
    names: tuple = ()

    def apply(self, features):
        return (np.asarray(features, dtype=float) - self.mean) / self.std

    def to_dict(self):
        return {
            "names": list(self.names),
            "mean": [float(v) for v in self.mean],
            "std": [float(v) for v in self.std],
            "fit_range": list(self.fit_range),
        }

    @classmethod
    def from_dict(cls, d):
        return cls(
            np.array(d["mean"], dtype=float),
            np.array(d["std"], dtype=float),
            tuple(d["fit_range"]),
            tuple(d.get("names", ())),
        )


def standardize(features, fit_range=None, names=None):
    """Centre and scale columns with statistics from rows ``fit_range``.

    ``fit_range`` is a ``(start, stop)`` half-open row interval (default:
    all rows). Population standard deviation is used. Returns the
    transformed matrix and the stats needed to treat later rows the same way.
    """
    x = np.asarray(features, dtype=float)
    start, stop = (0, len(x)) if fit_range is None else fit_range
    if stop <= start:
        raise InsufficientDataError("standardization fit range is empty")
    block = x[start:stop]
    mean = block.mean(axis=0)
    std = block.std(axis=0)
    flat = np.flatnonzero(~(std > 0))
    if flat.size:
        j = int(flat[0])
        label = names[j] if names is not None else f"column {j}"
        raise ConstantColumnError(f"{label} has zero variance over rows [{start}, {stop})")
    stats = StandardizationStats(mean, std, (int(start), int(stop)), tuple(names or ()))
    return stats.apply(x), stats


@dataclass
class PanelDataset:
    months: np.ndarray
    features: np.ndarray
    labels: np.ndarray
    names: tuple
    stats: StandardizationStats
    vintage_date: int = None
    report: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.months)

    def row_of(self, month):
        i = int(month - self.months[0])
        if not 0 <= i < len(self.months):
            raise IndexError(f"{format_month(month)} outside panel")
        return i


def monthly_levels(frame, catalog):
    """Raw levels of every catalog series on a common monthly grid.

    Returns ``(months, levels, interpolated)`` where ``interpolated`` counts
    spline-filled months per quarterly series.
    """
    firsts, lasts = [], []
    for spec in catalog:
        m, _ = frame.series[spec.abbreviation]
        if len(m):
            firsts.append(int(m[0]))
            lasts.append(int(m[-1]))
    if not firsts:
        raise InsufficientDataError(f"vintage {frame.label} holds no observations")
    grid = np.arange(min(firsts), max(lasts) + 1)
    levels = np.full((len(grid), len(catalog)), np.nan)
    interpolated = {}
    for j, spec in enumerate(catalog):
        m, v = frame.series[spec.abbreviation]
        m = np.asarray(m, dtype=int)
        v = np.asarray(v, dtype=float)
        if not len(m):
            continue
        if spec.native_frequency is Frequency.Quarterly:
            targets = np.arange(m[0], m[-1] + 1)
            vals = interpolate_quarterly_to_monthly(list(zip(m, v)), targets)
            levels[targets - grid[0], j] = vals
            interpolated[spec.abbreviation] = int(len(targets) - len(m))
        else:
            levels[m - grid[0], j] = v
    return grid, levels, interpolated


def build_panel(frame, catalog, stats=None, knn_k=DEFAULT_K, peak_inclusive=False, fit_range=None):
    """Transform, impute, standardize and label one vintage.

    When ``stats`` is given the panel is standardized with them (prediction
    time); otherwise they are fitted on ``fit_range`` rows (default: all).
    """
    check_catalog_coverage(frame, catalog)
    names = tuple(s.abbreviation for s in catalog)
    grid, levels, interpolated = monthly_levels(frame, catalog)
    if len(grid) < 2:
        raise InsufficientDataError(f"vintage {frame.label}: fewer than 2 months of data")
    trans = np.empty((len(grid) - 1, len(catalog)))
    for j, spec in enumerate(catalog):
        trans[:, j] = transform_series(levels[:, j], spec.transform, spec.abbreviation, grid)
    months = grid[1:]

    seen = ~np.isnan(trans).all(axis=1)
    lo, hi = np.flatnonzero(seen)[[0, -1]]
    months = months[lo : hi + 1]
    trans = trans[lo : hi + 1]

    gaps = np.isnan(trans)
    if gaps.any():
        # kNN distances on a scale-free copy, then back to original units
        centre = np.nanmean(trans, axis=0)
        scale = np.nanstd(trans, axis=0)
        scale[~(scale > 0)] = 1.0
        filled = impute_knn((trans - centre) / scale, knn_k, names) * scale + centre
        trans = np.where(gaps, filled, trans)

    if stats is None:
        features, stats = standardize(trans, fit_range, names)
    else:
        features = stats.apply(trans)
    labels = build_realtime_labels(frame.announcements, frame.vintage_date, months, peak_inclusive)
    report = {
        "vintage": frame.label,
        "rows": int(len(months)),
        "first_month": format_month(months[0]),
        "last_month": format_month(months[-1]),
        "imputed_cells": int(gaps.sum()),
        "imputed_by_series": {n: int(c) for n, c in zip(names, gaps.sum(axis=0)) if c},
        "interpolated_months": interpolated,
        "label_sources": [
            f"{a.kind.value}:{format_month(a.turning_point_month)}"
            f"@{format_month(a.announcement_month)}"
            for a in frame.announcements
        ],
        "recession_months": int(labels.sum()),
    }
    return PanelDataset(months, features, labels, names, stats, frame.vintage_date, report)
