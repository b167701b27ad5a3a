"""Confusion-matrix metrics, ROC and precision-recall curves."""

import csv
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import StructuralError, UndefinedMetricError

THRESHOLD = 0.5
METRIC_ORDER = ("auroc", "auprc", "balanced_accuracy", "mcc", "f1",
                "sensitivity", "specificity", "precision")


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    fn: int
    tn: int

    def __post_init__(self):
        if min(self.tp, self.fp, self.fn, self.tn) < 0:
            raise StructuralError("confusion counts must be non-negative")

    @property
    def total(self):
        return self.tp + self.fp + self.fn + self.tn


def _pair(probabilities, labels):
    p = np.asarray(probabilities, dtype=float).reshape(-1)
    y = np.asarray(labels).reshape(-1)
    if p.shape != y.shape:
        raise StructuralError(f"{p.size} probabilities vs {y.size} labels")
    if not np.all(np.isin(y, (0, 1))):
        raise StructuralError("labels must be 0 or 1")
    return p, y.astype(int)


def confusion(probabilities, labels, cutpoint=THRESHOLD):
    """Counts with a positive call whenever ``probability >= cutpoint``."""
    if not 0.0 < cutpoint < 1.0:
        raise StructuralError(f"cutpoint must lie in (0, 1), got {cutpoint}")
    p, y = _pair(probabilities, labels)
    call = p >= cutpoint
    pos = y == 1
    return ConfusionMatrix(
        int(np.sum(call & pos)), int(np.sum(call & ~pos)),
        int(np.sum(~call & pos)), int(np.sum(~call & ~pos)),
    )


@dataclass
class PointMetrics:
    sensitivity: float
    specificity: float
    precision: float
    balanced_accuracy: float
    mcc: float
    f1: float
    degenerate: tuple = ()

    def as_dict(self):
        return {
            "sensitivity": self.sensitivity,
            "specificity": self.specificity,
            "precision": self.precision,
            "balanced_accuracy": self.balanced_accuracy,
            "mcc": self.mcc,
            "f1": self.f1,
        }


def point_metrics(m):
    """Threshold metrics; a zero denominator yields 0 and is listed in
    ``degenerate``."""
    flags = []

    def ratio(name, num, den):
        if den == 0:
            flags.append(name)
            return 0.0
        return num / den

    sens = ratio("sensitivity", m.tp, m.tp + m.fn)
    spec = ratio("specificity", m.tn, m.tn + m.fp)
    prec = ratio("precision", m.tp, m.tp + m.fp)
    f1 = ratio("f1", 2 * m.tp, 2 * m.tp + m.fp + m.fn)
    den = (m.tp + m.fp) * (m.tp + m.fn) * (m.tn + m.fp) * (m.tn + m.fn)
    mcc = ratio("mcc", m.tp * m.tn - m.fp * m.fn, math.sqrt(den))
    return PointMetrics(sens, spec, prec, (sens + spec) / 2.0, mcc, f1, tuple(flags))


@dataclass
class CurveSeries:
    kind: str
    x: np.ndarray
    y: np.ndarray
    thresholds: np.ndarray
    area: float
    meta: dict = field(default_factory=dict)

    @property
    def points(self):
        return list(zip(self.x.tolist(), self.y.tolist()))


def trapezoid(x, y):
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return float(np.sum(np.diff(x) * (y[1:] + y[:-1]) / 2.0))


def _sweep(p, y):
    """Cumulative (tp, fp) at each unique threshold, highest first."""
    order = np.argsort(-p, kind="mergesort")
    ps = p[order]
    ys = y[order]
    tp = np.cumsum(ys)
    fp = np.cumsum(1 - ys)
    # last index of each run of equal scores
    ends = np.r_[np.flatnonzero(np.diff(ps) != 0), len(ps) - 1]
    return ps[ends], tp[ends], fp[ends]


def roc_curve(probabilities, labels):
    p, y = _pair(probabilities, labels)
    n_pos = int(y.sum())
    n_neg = len(y) - n_pos
    if n_pos == 0 or n_neg == 0:
        raise UndefinedMetricError("ROC curve needs both classes in the labels")
    thr, tp, fp = _sweep(p, y)
    fpr = np.r_[0.0, fp / n_neg]
    tpr = np.r_[0.0, tp / n_pos]
    return CurveSeries("ROC", fpr, tpr, np.r_[np.inf, thr], trapezoid(fpr, tpr))


def pr_curve(probabilities, labels):
    p, y = _pair(probabilities, labels)
    n_pos = int(y.sum())
    if n_pos == 0:
        raise UndefinedMetricError("precision-recall curve needs at least one positive label")
    thr, tp, fp = _sweep(p, y)
    recall = tp / n_pos
    precision = tp / (tp + fp)
    x = np.r_[0.0, recall]
    yv = np.r_[precision[0], precision]
    return CurveSeries("PR", x, yv, np.r_[thr[0], thr], trapezoid(x, yv),
                       {"base_rate": n_pos / len(y)})


def auroc_concordance(probabilities, labels):
    """Share of positive-negative pairs ranked correctly, ties counting half."""
    p, y = _pair(probabilities, labels)
    pos = p[y == 1]
    neg = p[y == 0]
    if not len(pos) or not len(neg):
        raise UndefinedMetricError("concordance needs both classes")
    diff = pos[:, None] - neg[None, :]
    return float(((diff > 0).sum() + 0.5 * (diff == 0).sum()) / diff.size)


def evaluate(probabilities, labels, cutpoint=THRESHOLD):
    """Every reported metric for one forecast series, as a flat dict."""
    p, y = _pair(probabilities, labels)
    m = confusion(p, y, cutpoint)
    pm = point_metrics(m)
    out = {"n": len(y), "positives": int(y.sum())}
    flags = list(pm.degenerate)
    try:
        out["auroc"] = roc_curve(p, y).area
    except UndefinedMetricError:
        out["auroc"] = 0.0
        flags.append("auroc")
    try:
        out["auprc"] = pr_curve(p, y).area
    except UndefinedMetricError:
        out["auprc"] = 0.0
        flags.append("auprc")
    out.update(pm.as_dict())
    out.update(tp=m.tp, fp=m.fp, fn=m.fn, tn=m.tn, degenerate=";".join(flags))
    return out


METRICS_HEADER = ["model", "horizon", "n", "positives", *METRIC_ORDER,
                  "tp", "fp", "fn", "tn", "degenerate"]


def write_metrics(path, rows):
    """``rows`` are dicts from :func:`evaluate` plus ``model`` and ``horizon``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(METRICS_HEADER)
        for r in rows:
            w.writerow([repr(r[k]) if isinstance(r[k], float) else r[k] for k in METRICS_HEADER])


def write_curve(path, curve):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["x", "y", "threshold"])
        for a, b, t in zip(curve.x, curve.y, curve.thresholds):
            w.writerow([repr(float(a)), repr(float(b)), repr(float(t))])


def curve_svg(curves, title="", width=480, height=400):
    """A standalone SVG line chart of one or more curves on the unit square."""
    pad = 48
    w = width - 2 * pad
    h = height - 2 * pad
    colours = ["#1f4e79", "#b03a2e", "#1e8449", "#7d3c98", "#b9770e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}" '
        f'viewBox="0 0 {width} {height}" font-family="sans-serif" font-size="12">',
        f'<rect x="{pad}" y="{pad}" width="{w}" height="{h}" fill="none" stroke="#444"/>',
        f'<text x="{width / 2}" y="{pad / 2}" text-anchor="middle">{title}</text>',
    ]
    for k in range(6):
        v = k / 5
        parts.append(f'<text x="{pad + v * w:.1f}" y="{pad + h + 16}" text-anchor="middle">{v:.1f}</text>')
        parts.append(f'<text x="{pad - 6}" y="{pad + h - v * h + 4:.1f}" text-anchor="end">{v:.1f}</text>')
    for i, (label, c) in enumerate(curves):
        pts = " ".join(f"{pad + a * w:.2f},{pad + h - b * h:.2f}" for a, b in zip(c.x, c.y))
        col = colours[i % len(colours)]
        parts.append(f'<polyline fill="none" stroke="{col}" stroke-width="1.5" points="{pts}"/>')
        parts.append(f'<text x="{pad + 8}" y="{pad + 16 + 14 * i}" fill="{col}">'
                     f'{label} (area {c.area:.3f})</text>')
    xl = "false positive rate" if curves and curves[0][1].kind == "ROC" else "recall"
    yl = "true positive rate" if curves and curves[0][1].kind == "ROC" else "precision"
    parts.append(f'<text x="{width / 2}" y="{height - 8}" text-anchor="middle">{xl}</text>')
    parts.append(f'<text x="14" y="{height / 2}" text-anchor="middle" '
                 f'transform="rotate(-90 14 {height / 2})">{yl}</text>')
    parts.append("</svg>")
    return "\n".join(parts) + "\n"


def write_svg(path, curves, title=""):
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(curve_svg(curves, title))
