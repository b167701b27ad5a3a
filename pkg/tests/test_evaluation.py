import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from recessnet.errors import StructuralError, UndefinedMetricError
from recessnet.evaluation import (
    ConfusionMatrix,
    auroc_concordance,
    confusion,
    curve_svg,
    evaluate,
    point_metrics,
    pr_curve,
    roc_curve,
    write_curve,
    write_metrics,
    write_svg,
)


def test_confusion_examples():
    assert confusion([0.9, 0.1], [1, 0]) == ConfusionMatrix(1, 0, 0, 1)
    m = confusion([0.0, 0.0, 0.0], [1, 0, 1])
    assert m.tp == 0 and m.fp == 0 and m.total == 3
    assert confusion([0.5], [1]).tp == 1
    assert confusion([0.3], [0], cutpoint=0.3).fp == 1
    with pytest.raises(StructuralError):
        confusion([0.5, 0.5], [1])
    with pytest.raises(StructuralError):
        confusion([0.5], [1], cutpoint=1.0)
    with pytest.raises(StructuralError):
        confusion([0.5], [2])


def test_point_metrics_perfect_and_degenerate():
    pm = point_metrics(ConfusionMatrix(10, 0, 0, 10))
    assert all(v == 1.0 for v in pm.as_dict().values())
    assert pm.degenerate == ()
    pm = point_metrics(ConfusionMatrix(0, 0, 4, 16))
    assert pm.precision == 0 and pm.mcc == 0 and pm.f1 == 0
    assert pm.specificity == 1.0 and pm.sensitivity == 0.0
    assert {"precision", "mcc"} <= set(pm.degenerate)


def test_point_metrics_hand_values():
    pm = point_metrics(ConfusionMatrix(tp=3, fp=1, fn=2, tn=4))
    assert pm.sensitivity == pytest.approx(0.6)
    assert pm.specificity == pytest.approx(0.8)
    assert pm.precision == pytest.approx(0.75)
    assert pm.f1 == pytest.approx(6 / 9)
    assert pm.mcc == pytest.approx((12 - 2) / np.sqrt(4 * 5 * 5 * 6))


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_metric_identities(tp, fp, fn, tn):
    m = ConfusionMatrix(tp, fp, fn, tn)
    pm = point_metrics(m)
    assert pm.balanced_accuracy == pytest.approx((pm.sensitivity + pm.specificity) / 2)
    if 2 * tp + fp + fn:
        assert pm.f1 == pytest.approx(2 * tp / (2 * tp + fp + fn))
    if pm.sensitivity + pm.precision > 0:
        assert pm.f1 == pytest.approx(2 * pm.sensitivity * pm.precision / (pm.sensitivity + pm.precision))
    assert -1 - 1e-12 <= pm.mcc <= 1 + 1e-12
    # swapping which class is "positive" leaves MCC unchanged
    assert point_metrics(ConfusionMatrix(tn, fn, fp, tp)).mcc == pytest.approx(pm.mcc)
    # inverting every prediction negates it
    assert point_metrics(ConfusionMatrix(fn, tn, tp, fp)).mcc == pytest.approx(-pm.mcc)


def test_roc_examples():
    assert roc_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).area == 1.0
    assert roc_curve([0.1, 0.2, 0.3, 0.4], [0, 1, 0, 1]).area == pytest.approx(0.75)
    assert roc_curve([0.9, 0.8, 0.2, 0.1], [0, 0, 1, 1]).area == 0.0
    c = roc_curve([0.5, 0.5], [0, 1])
    assert c.area == 0.5
    assert c.x[0] == 0 and c.x[-1] == 1 and np.isinf(c.thresholds[0])
    assert np.all(np.diff(c.x) >= 0)
    with pytest.raises(UndefinedMetricError):
        roc_curve([0.1, 0.2], [1, 1])


def _pr_brute(p, y):
    # enumerate every threshold and count directly
    p = np.asarray(p)
    y = np.asarray(y)
    pts = []
    for t in sorted(set(p.tolist()), reverse=True):
        call = p >= t
        tp = np.sum(call & (y == 1))
        pts.append((tp / y.sum(), tp / call.sum()))
    pts = [(0.0, pts[0][1])] + pts
    return sum((b[0] - a[0]) * (a[1] + b[1]) / 2 for a, b in zip(pts, pts[1:]))


def test_pr_examples():
    assert pr_curve([0.1, 0.2, 0.8, 0.9], [0, 0, 1, 1]).area == 1.0
    c = pr_curve([0.9, 0.8, 0.3], [1, 0, 1])
    assert c.area == pytest.approx(_pr_brute([0.9, 0.8, 0.3], [1, 0, 1]), abs=1e-15)
    assert c.area == pytest.approx(0.5 + 0.5 * (0.5 + 2 / 3) / 2)
    y = np.r_[np.ones(30), np.zeros(70)]
    flat = pr_curve(np.full(100, 0.4), y)
    assert flat.area == pytest.approx(0.3) and flat.meta["base_rate"] == 0.3
    with pytest.raises(UndefinedMetricError):
        pr_curve([0.1, 0.2], [0, 0])


def test_auroc_matches_concordance_and_sklearn(rng):
    from sklearn.metrics import roc_auc_score

    for _ in range(50):
        n = int(rng.integers(2, 200))
        y = rng.integers(0, 2, n)
        if y.min() == y.max():
            continue
        p = np.round(rng.random(n), int(rng.integers(1, 4)))
        area = roc_curve(p, y).area
        assert abs(area - auroc_concordance(p, y)) < 1e-9
        assert abs(area - roc_auc_score(y, p)) < 1e-9
        assert abs(pr_curve(p, y).area - _pr_brute(p, y)) < 1e-12


def test_areas_invariant_to_monotone_remap(rng):
    p = rng.random(150)
    y = (rng.random(150) < p).astype(int)
    assert roc_curve(p**2, y).area == pytest.approx(roc_curve(p, y).area, abs=1e-15)
    assert pr_curve(p**2, y).area == pytest.approx(pr_curve(p, y).area, abs=1e-15)


def test_evaluate_and_writers(tmp_path):
    p = np.array([0.9, 0.7, 0.4, 0.2, 0.6])
    y = np.array([1, 1, 0, 0, 0])
    out = evaluate(p, y)
    assert (out["tp"], out["fp"], out["fn"], out["tn"]) == (2, 1, 0, 2)
    assert out["auroc"] == 1.0 and out["n"] == 5 and out["positives"] == 2
    assert out["degenerate"] == ""
    none = evaluate([0.1, 0.2], [0, 0])
    assert "auroc" in none["degenerate"] and "auprc" in none["degenerate"]

    write_metrics(tmp_path / "m.csv", [dict(out, model="gru", horizon="Nowcast")])
    head, row = (tmp_path / "m.csv").read_text().splitlines()
    assert head.split(",")[:4] == ["model", "horizon", "n", "positives"]
    assert row.startswith("gru,Nowcast,5,2,1.0")

    roc = roc_curve(p, y)
    write_curve(tmp_path / "c.csv", roc)
    lines = (tmp_path / "c.csv").read_text().splitlines()
    assert lines[0] == "x,y,threshold" and len(lines) == len(roc.x) + 1
    write_svg(tmp_path / "c.svg", [("gru", roc)], "Nowcast")
    svg = (tmp_path / "c.svg").read_text()
    assert svg.startswith("<svg") and "polyline" in svg and "false positive rate" in svg
    assert "recall" in curve_svg([("gru", pr_curve(p, y))])
