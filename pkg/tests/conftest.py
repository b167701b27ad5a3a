import numpy as np
import pytest

from recessnet.data import load_catalog
from recessnet.data.catalog import Category, Frequency, SeriesSpec, Transform
from recessnet.data.vintage import VintageFrame
from recessnet.months import parse_month


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def catalog():
    return load_catalog()


def small_catalog(n=4):
    specs = [
        SeriesSpec("A", Category.Output, Transform.LogGrowth, Frequency.Monthly),
        SeriesSpec("B", Category.FinancialMarket, Transform.FirstDifference, Frequency.Monthly),
        SeriesSpec("C", Category.Income, Transform.PercentChange, Frequency.Monthly),
        SeriesSpec("Q", Category.Output, Transform.LogGrowth, Frequency.Quarterly),
    ]
    return specs[:n]


def small_frame(n_months=40, vintage="2001-01", seed=0, announcements=(), quarterly=True):
    """Positive random-walk levels for :func:`small_catalog` series."""
    r = np.random.default_rng(seed)
    v = parse_month(vintage)
    months = np.arange(v - n_months, v)
    series = {}
    for name in ("A", "B", "C"):
        series[name] = (months, 100.0 + np.cumsum(r.normal(0, 1, n_months)))
    if not quarterly:
        return VintageFrame(v, series, list(announcements))
    q = months[months % 3 == 2]
    series["Q"] = (q, 50.0 + np.cumsum(r.normal(0, 1, len(q))))
    return VintageFrame(v, series, list(announcements))
