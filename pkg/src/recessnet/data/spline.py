"""Natural cubic spline interpolation of quarterly series onto months."""

import numpy as np

from ..errors import ExtrapolationError, InsufficientDataError


def _second_derivatives(x, y):
    # Tridiagonal system for interior second derivatives; M_0 = M_n = 0.
    n = len(x) - 1
    h = np.diff(x)
    m = np.zeros(n + 1)
    if n < 2:
        return m
    sub = h[1:-1].copy()
    diag = 2.0 * (h[:-1] + h[1:])
    sup = h[1:-1].copy()
    slope = np.diff(y) / h
    rhs = 6.0 * (slope[1:] - slope[:-1])
    # Thomas algorithm
    k = n - 1
    c = np.empty(k)
    d = np.empty(k)
    c[0] = sup[0] / diag[0] if k > 1 else 0.0
    d[0] = rhs[0] / diag[0]
    for i in range(1, k):
        denom = diag[i] - sub[i - 1] * c[i - 1]
        c[i] = sup[i] / denom if i < k - 1 else 0.0
        d[i] = (rhs[i] - sub[i - 1] * d[i - 1]) / denom
    inner = np.empty(k)
    inner[-1] = d[-1]
    for i in range(k - 2, -1, -1):
        inner[i] = d[i] - c[i] * inner[i + 1]
    m[1:-1] = inner
    return m


class NaturalCubicSpline:
    """Interpolating cubic spline with zero curvature at both ends."""

    def __init__(self, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        if x.ndim != 1 or x.shape != y.shape:
            raise ValueError("knot abscissae and values must be 1-d and equal length")
        if np.any(np.diff(x) <= 0):
            raise ValueError("knot abscissae must be strictly increasing")
        self.x = x
        self.y = y
        self.m = _second_derivatives(x, y)

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        x, y, m = self.x, self.y, self.m
        i = np.clip(np.searchsorted(x, t, side="right") - 1, 0, len(x) - 2)
        h = x[i + 1] - x[i]
        a = (x[i + 1] - t) / h
        b = (t - x[i]) / h
        return (
            a * y[i]
            + b * y[i + 1]
            + ((a**3 - a) * m[i] + (b**3 - b) * m[i + 1]) * h * h / 6.0
        )


def interpolate_quarterly_to_monthly(points, targets):
    """Evaluate the natural cubic spline through ``points`` at ``targets``.

    ``points`` is a sequence of ``(month index, value)`` knots, ``targets``
    month indices inside the knot range. Knot months are returned exactly.
    """
    if len(points) < 3:
        raise InsufficientDataError(f"natural cubic spline needs >= 3 knots, got {len(points)}")
    pts = sorted((float(m), float(v)) for m, v in points)
    xs = np.array([p[0] for p in pts])
    ys = np.array([p[1] for p in pts])
    t = np.asarray(targets, dtype=float)
    if t.size and (t.min() < xs[0] or t.max() > xs[-1]):
        raise ExtrapolationError(
            f"targets must lie in [{xs[0]:g}, {xs[-1]:g}], got [{t.min():g}, {t.max():g}]"
        )
    out = NaturalCubicSpline(xs, ys)(t)
    # snap knots to their stored values so interpolation is exact
    pos = np.searchsorted(xs, t)
    hit = (pos < len(xs)) & (xs[np.minimum(pos, len(xs) - 1)] == t)
    out[hit] = ys[pos[hit]]
    return out
