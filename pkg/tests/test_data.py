import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy.interpolate import CubicSpline

from conftest import small_catalog, small_frame
from recessnet.data import (
    BusinessCycleAnnouncement,
    Category,
    Frequency,
    Transform,
    TurningPoint,
    VintageArchive,
    aggregate_daily_to_monthly,
    build_panel,
    build_realtime_labels,
    impute_knn,
    interpolate_quarterly_to_monthly,
    load_announcements,
    load_catalog,
    read_vintage_csv,
    standardize,
    transform_series,
    write_announcements,
    write_vintage_csv,
)
from recessnet.data.impute import row_distances
from recessnet.errors import (
    ConstantColumnError,
    DomainError,
    ExtrapolationError,
    InconsistentAnnouncementsError,
    InsufficientDataError,
    ParameterError,
    ParseError,
    SchemaError,
    UnimputableColumnError,
    VintageGapError,
)
from recessnet.months import format_month, parse_month

M = parse_month


# ---------------------------------------------------------------- transforms

def test_transform_examples():
    np.testing.assert_allclose(transform_series([5, 5, 5], Transform.LogGrowth), [0, 0])
    np.testing.assert_allclose(transform_series([1, 3, 6], Transform.FirstDifference), [2, 3])
    np.testing.assert_allclose(transform_series([100, 110], Transform.PercentChange), [0.10])
    np.testing.assert_allclose(
        transform_series([1.0, np.e], "LogGrowth"), [1.0], rtol=1e-15
    )


def test_transform_domain_error_names_series_and_month():
    with pytest.raises(DomainError, match=r"HOUST.*1990-03"):
        transform_series([3.0, 2.0, 0.0], Transform.LogGrowth, "HOUST",
                         months=[M("1990-01"), M("1990-02"), M("1990-03")])
    with pytest.raises(DomainError):
        transform_series([1.0, -1.0], Transform.PercentChange)
    # differences are fine with negative levels
    transform_series([1.0, -1.0], Transform.FirstDifference)


def test_transform_too_short():
    with pytest.raises(InsufficientDataError):
        transform_series([1.0], Transform.FirstDifference)


def test_transform_gap_propagates():
    out = transform_series([1.0, np.nan, 3.0, 4.0], Transform.FirstDifference)
    assert np.isnan(out[:2]).all() and out[2] == 1.0


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(0.1, 1e4), min_size=4, max_size=40), st.integers(2, 30))
def test_transform_commutes_with_truncation(values, cut):
    cut = min(cut, len(values))
    for kind in Transform:
        full = transform_series(values, kind)
        part = transform_series(values[:cut], kind)
        np.testing.assert_array_equal(full[: cut - 1], part)


# ---------------------------------------------------------------- aggregation

def test_aggregate_examples():
    assert aggregate_daily_to_monthly([("2020-01-02", 2), ("2020-01-20", 4)]) == [(M("2020-01"), 3.0)]
    one = [("2020-01-05", 1.5), ("2020-02-05", 2.5)]
    assert [v for _, v in aggregate_daily_to_monthly(one)] == [1.5, 2.5]
    two = [("2020-02-01", 2), ("2020-01-01", 1), ("2020-01-02", 1), ("2020-02-03", 2), ("2020-01-03", 1)]
    assert aggregate_daily_to_monthly(two) == [(M("2020-01"), 1.0), (M("2020-02"), 2.0)]
    assert aggregate_daily_to_monthly([]) == []


# ---------------------------------------------------------------- spline

def _natural_spline_dense(x, y, t):
    # full (n+1)x(n+1) system for the second derivatives, solved densely
    n = len(x) - 1
    h = np.diff(x)
    A = np.zeros((n + 1, n + 1))
    r = np.zeros(n + 1)
    A[0, 0] = A[n, n] = 1.0
    for i in range(1, n):
        A[i, i - 1] = h[i - 1]
        A[i, i] = 2 * (h[i - 1] + h[i])
        A[i, i + 1] = h[i]
        r[i] = 6 * ((y[i + 1] - y[i]) / h[i] - (y[i] - y[i - 1]) / h[i - 1])
    m = np.linalg.solve(A, r)
    out = []
    for tv in t:
        i = min(np.searchsorted(x, tv, side="right") - 1, n - 1)
        a = (x[i + 1] - tv) / h[i]
        b = (tv - x[i]) / h[i]
        out.append(a * y[i] + b * y[i + 1] + ((a**3 - a) * m[i] + (b**3 - b) * m[i + 1]) * h[i] ** 2 / 6)
    return np.array(out)


def test_spline_collinear_knots_give_line():
    assert interpolate_quarterly_to_monthly([(0, 0), (3, 3), (6, 6)], [1])[0] == pytest.approx(1.0, abs=1e-14)


def test_spline_hat_matches_dense_solver_and_scipy():
    pts = [(0, 0.0), (3, 1.0), (6, 0.0)]
    got = interpolate_quarterly_to_monthly(pts, [1, 2])
    x = np.array([0.0, 3.0, 6.0])
    y = np.array([0.0, 1.0, 0.0])
    np.testing.assert_allclose(got, _natural_spline_dense(x, y, [1, 2]), atol=1e-12)
    np.testing.assert_allclose(got, CubicSpline(x, y, bc_type="natural")([1, 2]), atol=1e-12)
    # by hand the middle second derivative is -1/3
    np.testing.assert_allclose(got, [13 / 27, 23 / 27], atol=1e-12)


def test_spline_random_knots_vs_scipy(rng):
    for _ in range(20):
        n = rng.integers(3, 30)
        x = np.cumsum(rng.integers(1, 5, n)).astype(float)
        y = rng.normal(size=n)
        t = np.linspace(x[0], x[-1], 97)
        got = interpolate_quarterly_to_monthly(list(zip(x, y)), t)
        np.testing.assert_allclose(got, CubicSpline(x, y, bc_type="natural")(t), atol=1e-10)
        np.testing.assert_allclose(got, _natural_spline_dense(x, y, t), atol=1e-10)


@settings(max_examples=40, deadline=None)
@given(st.lists(st.floats(-100, 100), min_size=3, max_size=15))
def test_spline_reproduces_knots_exactly(ys):
    xs = [3 * i for i in range(len(ys))]
    got = interpolate_quarterly_to_monthly(list(zip(xs, ys)), xs)
    assert got.tolist() == [float(v) for v in ys]


@settings(max_examples=40, deadline=None)
@given(st.floats(-10, 10), st.floats(-10, 10), st.integers(3, 12))
def test_spline_exact_on_affine(a, b, n):
    xs = np.arange(n) * 3.0
    t = np.arange(xs[-1] + 1)
    got = interpolate_quarterly_to_monthly(list(zip(xs, a + b * xs)), t)
    np.testing.assert_allclose(got, a + b * t, atol=1e-9)


def test_spline_errors():
    with pytest.raises(InsufficientDataError):
        interpolate_quarterly_to_monthly([(0, 1), (3, 2)], [1])
    with pytest.raises(ExtrapolationError):
        interpolate_quarterly_to_monthly([(0, 1), (3, 2), (6, 3)], [7])
    with pytest.raises(ExtrapolationError):
        interpolate_quarterly_to_monthly([(0, 1), (3, 2), (6, 3)], [-1])


# ---------------------------------------------------------------- knn

def test_knn_identity_on_complete(rng):
    x = rng.normal(size=(6, 3))
    np.testing.assert_array_equal(impute_knn(x), x)


def test_knn_unique_neighbour():
    assert impute_knn([[1, 1], [1, np.nan]], k=1)[1, 1] == 1.0


def _knn_brute(x, i, j, k):
    # exhaustive ranking over rows observing column j
    cands = []
    for r in range(len(x)):
        if r == i or np.isnan(x[r, j]):
            continue
        shared = [c for c in range(x.shape[1]) if not np.isnan(x[i, c]) and not np.isnan(x[r, c])]
        d = np.sqrt(sum((x[i, c] - x[r, c]) ** 2 for c in shared) / len(shared))
        cands.append((d, r))
    cands.sort()
    return np.mean([x[r, j] for _, r in cands[:k]])


def test_knn_matches_brute_force(rng):
    x = rng.normal(size=(5, 4))
    x[2, 1] = np.nan
    got = impute_knn(x, k=2)
    assert got[2, 1] == pytest.approx(_knn_brute(x, 2, 1, 2), abs=1e-14)
    for _ in range(30):
        x = rng.normal(size=(12, 5))
        mask = rng.random(x.shape) < 0.15
        mask[:, 0] = False  # keeps every row partly observed
        x[mask] = np.nan
        got = impute_knn(x, k=3)
        for i, j in zip(*np.nonzero(mask)):
            assert got[i, j] == pytest.approx(_knn_brute(x, i, j, 3), abs=1e-12)


def test_knn_observed_untouched_and_idempotent(rng):
    x = rng.normal(size=(20, 4))
    x[rng.random(x.shape) < 0.1] = np.nan
    x[:, 0] = rng.normal(size=20)
    once = impute_knn(x)
    seen = ~np.isnan(x)
    np.testing.assert_array_equal(once[seen], x[seen])
    np.testing.assert_array_equal(impute_knn(once), once)


def test_knn_errors():
    with pytest.raises(UnimputableColumnError):
        impute_knn([[1, np.nan], [2, np.nan]])
    with pytest.raises(ParameterError):
        impute_knn([[1, 2], [1, np.nan]], k=3)
    with pytest.raises(ParameterError):
        impute_knn([[1, 2], [1, np.nan]], k=0)


def test_row_distance_normalised_by_shared_count():
    x = np.array([[0.0, 0.0], [3.0, 4.0], [np.nan, 2.0]])
    d = row_distances(x, 0)
    np.testing.assert_allclose(d, [0.0, np.sqrt(25 / 2), 2.0])


# ---------------------------------------------------------------- standardize

def test_standardize_examples():
    out, stats = standardize(np.array([[0.0], [2.0]]))
    np.testing.assert_allclose(out.ravel(), [-1, 1])
    assert stats.mean[0] == 1 and stats.std[0] == 1
    z = np.array([[-1.0], [1.0]])
    np.testing.assert_allclose(standardize(z)[0], z, atol=1e-12)
    ramp = np.arange(10.0)[:, None]
    out, _ = standardize(ramp, fit_range=(0, 5))
    assert np.all(np.abs(out[5:]) > 1)


def test_standardize_moments_and_reuse(rng):
    x = rng.normal(3, 2, size=(50, 4))
    out, stats = standardize(x, fit_range=(0, 40))
    assert np.all(np.abs(out[:40].mean(axis=0)) < 1e-9)
    assert np.all(np.abs(out[:40].var(axis=0) - 1) < 1e-9)
    assert stats.apply(x).tobytes() == out.tobytes()
    assert type(stats).from_dict(stats.to_dict()).apply(x).tobytes() == out.tobytes()


def test_standardize_constant_column_named():
    with pytest.raises(ConstantColumnError, match="FLAT"):
        standardize(np.array([[1.0, 1.0], [2.0, 1.0]]), names=["OK", "FLAT"])


# ---------------------------------------------------------------- labels

@pytest.fixture(scope="module")
def announcements():
    return load_announcements()


def test_label_worked_examples(announcements):
    assert build_realtime_labels(announcements, M("2008-06"), [M("2008-01")]).tolist() == [0]
    months = np.arange(M("2008-01"), M("2008-12") + 1)
    assert build_realtime_labels(announcements, M("2009-01"), months).tolist() == [1] * 12
    assert build_realtime_labels(announcements, M("2021-08"), [M("2020-05")]).tolist() == [0]


def test_label_convention(announcements):
    final = 10**6
    lab = build_realtime_labels(announcements, final, [M("2007-12"), M("2008-01"), M("2009-06"), M("2009-07")])
    assert lab.tolist() == [0, 1, 1, 0]
    lab = build_realtime_labels(announcements, final, [M("2007-12")], peak_inclusive=True)
    assert lab.tolist() == [1]


def test_labels_stable_once_announced(announcements):
    months = np.arange(M("1979-01"), M("2021-12"))
    final = build_realtime_labels(announcements, 10**6, months)
    for v in range(M("1980-01"), M("2022-01"), 5):
        early = build_realtime_labels(announcements, v, months)
        known = [a for a in announcements if a.announcement_month <= v]
        if not known:
            continue
        last = max(a.turning_point_month for a in known)
        settled = months <= last
        np.testing.assert_array_equal(early[settled], final[settled])


def test_labels_reject_repeated_kind():
    a = [BusinessCycleAnnouncement(M("2000-01"), TurningPoint.Peak, M("2000-06")),
         BusinessCycleAnnouncement(M("2001-01"), TurningPoint.Peak, M("2001-06"))]
    with pytest.raises(InconsistentAnnouncementsError):
        build_realtime_labels(a, 10**6, [M("2000-05")])
    with pytest.raises(InconsistentAnnouncementsError):
        BusinessCycleAnnouncement(M("2000-06"), TurningPoint.Peak, M("2000-01"))


def test_announcements_round_trip(tmp_path, announcements):
    p = tmp_path / "ann.csv"
    write_announcements(p, announcements)
    assert load_announcements(str(p)) == announcements
    assert min(a.announcement_month - a.turning_point_month for a in announcements) == 4
    assert max(a.announcement_month - a.turning_point_month for a in announcements) == 21
    bad = tmp_path / "bad.csv"
    bad.write_text("when,kind,announced\n")
    with pytest.raises(ParseError):
        load_announcements(str(bad))


# ---------------------------------------------------------------- catalog

def test_default_catalog_matches_predictor_table():
    cat = load_catalog()
    assert len(cat) == 25
    names = [s.abbreviation for s in cat]
    assert len(set(names)) == 25 and names[0] == "AHETPI" and names[-1] == "W875RX1"
    by = {s.abbreviation: s for s in cat}
    assert {n for n, s in by.items() if s.native_frequency is Frequency.Quarterly} == {"CP", "GDPC1", "PRFI"}
    assert {n for n, s in by.items() if s.native_frequency is Frequency.Daily} == {"SP500"}
    fd = {"BAA", "BAA10YM", "FEDFUNDS", "M1REAL", "M2REAL", "TB3MS", "T5Y3MM", "UNRATE"}
    assert {n for n, s in by.items() if s.transform is Transform.FirstDifference} == fd
    assert {n for n, s in by.items() if s.transform is Transform.PercentChange} == {"AHETPI", "AWHNONAG"}
    assert by["UMCSENT"].category is Category.Prices
    assert by["PAYEMS"].category is Category.LaborMarket


def test_catalog_duplicate_rejected(tmp_path):
    p = tmp_path / "cat.csv"
    p.write_text("abbreviation,category,transform,frequency\nX,Output,LogGrowth,Monthly\n"
                 "X,Output,LogGrowth,Monthly\n")
    with pytest.raises(SchemaError):
        load_catalog(str(p))
    p.write_text("abbreviation,category,transform,frequency\nX,Output,log growth rate,Monthly\n")
    assert load_catalog(str(p))[0].transform is Transform.LogGrowth


# ---------------------------------------------------------------- vintages

def test_vintage_round_trip(tmp_path):
    frame = small_frame()
    p = tmp_path / "2001-01.csv"
    write_vintage_csv(p, frame)
    back = read_vintage_csv(str(p))
    assert back.vintage_date == frame.vintage_date
    for k, (m, v) in frame.series.items():
        np.testing.assert_array_equal(back.series[k][0], m)
        np.testing.assert_array_equal(back.series[k][1], v)


def test_vintage_daily_rows_are_averaged(tmp_path):
    p = tmp_path / "2000-04.csv"
    p.write_text("series,obs_month,value\nSP,2000-01-03,10\nSP,2000-01-04,20\nSP,2000-02-01,5\n")
    f = read_vintage_csv(str(p))
    assert f.series["SP"][1].tolist() == [15.0, 5.0]


def test_vintage_rejects_future_and_bad_rows(tmp_path):
    p = tmp_path / "2000-02.csv"
    p.write_text("series,obs_month,value\nX,2000-02,1\n")
    with pytest.raises(Exception, match="vintage"):
        read_vintage_csv(str(p))
    p.write_text("series,obs_month,value\nX,2000-13,1\n")
    with pytest.raises(ParseError) as info:
        read_vintage_csv(str(p))
    assert info.value.line == 2
    p.write_text("series,month,value\n")
    with pytest.raises(ParseError):
        read_vintage_csv(str(p))


def test_archive_lookup(tmp_path):
    frame = small_frame()
    write_vintage_csv(tmp_path / "2001-01.csv", frame)
    arch = VintageArchive.from_directory(str(tmp_path))
    assert arch.dates == [M("2001-01")]
    assert arch.get(M("2001-01")).series["A"][1].size == 40
    with pytest.raises(VintageGapError):
        arch.get(M("2001-02"))


# ---------------------------------------------------------------- panel

def test_build_panel_shapes_and_moments():
    cat = small_catalog()
    frame = small_frame(60)
    panel = build_panel(frame, cat)
    assert panel.features.shape == (len(panel.months), 4)
    assert not np.isnan(panel.features).any()
    assert np.all(np.abs(panel.features.mean(axis=0)) < 1e-9)
    assert np.all(np.abs(panel.features.var(axis=0) - 1) < 1e-9)
    assert set(np.unique(panel.labels)) <= {0, 1}
    # quarterly knots stop before the last month: tail cells are imputed
    assert panel.report["imputed_cells"] >= 1
    assert panel.report["interpolated_months"]["Q"] > 0


def test_build_panel_with_gap_and_stats_reuse():
    cat = small_catalog(3)
    frame = small_frame(50, quarterly=False)
    m, v = frame.series["B"]
    v = v.copy()
    v[20] = np.nan
    frame.series["B"] = (m, v)
    panel = build_panel(frame, cat, fit_range=(0, 30))
    assert not np.isnan(panel.features).any()
    assert panel.stats.fit_range == (0, 30)
    again = build_panel(frame, cat, stats=panel.stats)
    assert again.features.tobytes() == panel.features.tobytes()


def test_build_panel_labels_follow_vintage():
    ann = [BusinessCycleAnnouncement(M("2000-03"), TurningPoint.Peak, M("2000-08"))]
    cat = small_catalog(3)
    before = build_panel(small_frame(40, "2000-07", announcements=ann, quarterly=False).truncated(M("2000-07"), ann), cat)
    after = build_panel(small_frame(40, "2000-09", announcements=ann, quarterly=False).truncated(M("2000-09"), ann), cat)
    assert before.labels.sum() == 0
    assert after.labels[after.months > M("2000-03")].all()


def test_build_panel_schema_mismatch():
    with pytest.raises(SchemaError):
        build_panel(small_frame(), small_catalog(2))


def test_month_helpers():
    assert format_month(M("1999-12")) == "1999-12"
    assert M("2000-01") - M("1999-12") == 1
    with pytest.raises(ValueError):
        M("2000-00")
