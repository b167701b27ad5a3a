"""Synthetic two-regime economy with a known leading signal.

The regime alternates between expansions and shorter recessions. A handful
of series move with the regime three months ahead of it; the rest are
persistent noise. Turning points are announced with realistic lags, and
vintages are revision-free cuts with a two-month publication lag.
"""

import os
from dataclasses import dataclass

import numpy as np

from .data.catalog import Category, Frequency, SeriesSpec, Transform
from .data.labels import BusinessCycleAnnouncement, TurningPoint, write_announcements
from .data.vintage import LaggedArchive, write_vintage_csv
from .months import format_month, parse_month

N_SERIES = 25
N_LEADING = 5
LEAD = 3
PUBLICATION_LAG = 2


@dataclass
class SyntheticEconomy:
    catalog: list
    months: np.ndarray
    regime: np.ndarray
    levels: np.ndarray
    announcements: list
    archive: LaggedArchive
    leading: tuple

    @property
    def names(self):
        return tuple(s.abbreviation for s in self.catalog)


def synthetic_catalog(n_series=N_SERIES, n_leading=N_LEADING):
    cats = list(Category)
    out = []
    for j in range(n_series):
        tag = "LEAD" if j < n_leading else "NOISE"
        out.append(SeriesSpec(
            f"{tag}{j + 1:02d}", cats[j % len(cats)], Transform.FirstDifference,
            Frequency.Monthly, f"synthetic {tag.lower()} series {j + 1}",
        ))
    return out


def regime_path(n, rng, expansion=(40, 80), recession=(8, 16)):
    """0/1 regime path of length ``n`` that starts mid-expansion."""
    path = []
    state = 0
    first = True
    while len(path) < n:
        lo, hi = expansion if state == 0 else recession
        length = int(rng.integers(lo, hi + 1))
        if first:
            length = int(rng.integers(lo // 2, hi + 1))
            first = False
        path.extend([state] * length)
        state = 1 - state
    return np.array(path[:n], dtype=int)


def turning_points(months, regime, rng, peak_lag=(6, 12), trough_lag=(12, 20)):
    """Announcements for the regime path.

    A recession spanning months ``a..b`` has its peak at ``a - 1`` and its
    trough at ``b``, so the indicator is 1 exactly on ``a..b``.
    """
    out = []
    for t in range(1, len(regime)):
        if regime[t] == 1 and regime[t - 1] == 0:
            m = int(months[t - 1])
            out.append(BusinessCycleAnnouncement(
                m, TurningPoint.Peak, m + int(rng.integers(peak_lag[0], peak_lag[1] + 1))))
        elif regime[t] == 0 and regime[t - 1] == 1:
            m = int(months[t - 1])
            out.append(BusinessCycleAnnouncement(
                m, TurningPoint.Trough, m + int(rng.integers(trough_lag[0], trough_lag[1] + 1))))
    return out


def generate(n_months=600, seed=0, start="1970-01", signal=1.0, noise=1.0, ar=0.5,
             n_series=N_SERIES, n_leading=N_LEADING, lead=LEAD):
    """Build the economy and its real-time archive.

    Leading series change by ``signal * (2 * regime[t + lead] - 1)`` plus
    noise each month, so their first differences reveal the regime ``lead``
    months early. Other series follow AR(1) differences.
    """
    rng = np.random.default_rng(seed)
    first = parse_month(start)
    months = np.arange(first, first + n_months)
    regime = regime_path(n_months + lead, rng)
    catalog = synthetic_catalog(n_series, n_leading)
    diffs = np.empty((n_months, n_series))
    ahead = 2.0 * regime[lead : lead + n_months] - 1.0
    for j in range(n_series):
        eps = rng.normal(0.0, noise, n_months)
        if j < n_leading:
            diffs[:, j] = signal * ahead + eps
        else:
            d = np.empty(n_months)
            d[0] = eps[0]
            for t in range(1, n_months):
                d[t] = ar * d[t - 1] + eps[t]
            diffs[:, j] = d
    levels = 100.0 + np.cumsum(diffs, axis=0)
    regime = regime[:n_months]
    anns = turning_points(months, regime, rng)
    series = {s.abbreviation: (months, levels[:, j]) for j, s in enumerate(catalog)}
    archive = LaggedArchive(series, anns, months[0] + PUBLICATION_LAG + 1,
                            months[-1] + PUBLICATION_LAG, PUBLICATION_LAG, catalog)
    return SyntheticEconomy(catalog, months, regime, levels, anns, archive,
                            tuple(s.abbreviation for s in catalog[:n_leading]))


def write_catalog(path, catalog):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("abbreviation,category,transform,frequency,description\n")
        for s in catalog:
            fh.write(f"{s.abbreviation},{s.category.value},{s.transform.value},"
                     f"{s.native_frequency.value},{s.description}\n")


def write_economy(directory, economy, vintages=None):
    """Write catalog, announcements and vintage files under ``directory``.

    ``vintages`` restricts which vintage months are written (default: all).
    """
    vdir = os.path.join(directory, "vintages")
    os.makedirs(vdir, exist_ok=True)
    write_catalog(os.path.join(directory, "catalog.csv"), economy.catalog)
    write_announcements(os.path.join(directory, "announcements.csv"), economy.announcements)
    for v in vintages if vintages is not None else economy.archive.dates:
        frame = economy.archive.get(v)
        write_vintage_csv(os.path.join(vdir, f"{format_month(v)}.csv"), frame)
    return vdir
