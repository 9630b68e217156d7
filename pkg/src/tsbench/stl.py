"""Additive seasonal-trend decomposition via iterated Loess smoothing.

The inner loop alternates cycle-subseries smoothing (with one-period
extension), a triple-moving-average low-pass filter, and trend smoothing; one
robustness pass reweights by bisquare of the remainder. Parameters follow the
classic defaults: effectively-periodic seasonal smoothing (window 10L+1,
degree 0), trend window just above 1.5 seasonal periods (degree 1), low-pass
window of one period.

The remainder is defined as the residual, so x - T - S - R is identically
zero however the inputs look.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from tsbench._kernels import loess_regular

INNER_ITERATIONS = 2
ROBUST_ITERATIONS = 1


def next_odd(v: float) -> int:
    """Smallest odd integer >= v."""
    n = int(np.ceil(v))
    return n if n % 2 == 1 else n + 1


@dataclass(frozen=True)
class StlDecomposition:
    """Trend, seasonal, and remainder components; T + S + R reconstructs the input."""

    trend: np.ndarray
    seasonal: np.ndarray
    remainder: np.ndarray
    period: int

    @property
    def length(self) -> int:
        return self.trend.shape[0]


def _moving_average(v: np.ndarray, width: int) -> np.ndarray:
    c = np.concatenate([[0.0], np.cumsum(v)])
    return (c[width:] - c[:-width]) / width


def _lowpass(c: np.ndarray, m: int, l_window: int) -> np.ndarray:
    out = _moving_average(_moving_average(_moving_average(c, m), m), 3)
    return loess_regular(out, l_window, 1, None, 0)


def _seasonal_smooth(detrended: np.ndarray, m: int, s_window: int, rho: np.ndarray | None) -> np.ndarray:
    """Smooth each cycle-subseries, extending one period at both ends."""
    n = detrended.shape[0]
    c = np.empty(n + 2 * m)
    for phase in range(m):
        sub = detrended[phase::m]
        rsub = rho[phase::m] if rho is not None else None
        fitted = loess_regular(sub, s_window, 0, rsub, 1)  # positions -1 .. K
        c[phase::m] = fitted
    return c


def _bisquare_weights(residual: np.ndarray) -> np.ndarray:
    h = 6.0 * np.median(np.abs(residual))
    if h <= 0.0:
        return np.ones_like(residual)
    u = np.clip(np.abs(residual) / h, 0.0, 1.0)
    return (1.0 - u**2) ** 2


def trend_window(m: int, s_window: int) -> int:
    return next_odd(1.5 * m / (1.0 - 1.5 / s_window))


def stl_decompose(x, m: int) -> StlDecomposition:
    """Decompose a fully observed series into trend + seasonal + remainder.

    Needs at least two full cycles (L >= 2m+1) and m >= 2 for seasonal
    extraction; otherwise falls back to trendline-only mode where the seasonal
    component is identically zero and the trend is a Loess smooth of the
    series.
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if n < 3:
        raise ValueError("need at least 3 observations")
    if np.isnan(x).any():
        raise ValueError("series must be fully imputed before decomposition")

    if m <= 1 or n < 2 * m + 1:
        # Trendline-only mode. The window keeps the trend a broad smooth even
        # when m carries no usable scale (m <= 1).
        t_win = next_odd(max(1.5 * m, 0.3 * n))
        trend = loess_regular(x, t_win, 1, None, 0)
        seasonal = np.zeros(n)
        remainder = (x - trend) - seasonal
        return StlDecomposition(trend, seasonal, remainder, m)

    s_window = 10 * n + 1
    t_window_ = trend_window(m, s_window)
    l_window = next_odd(m)

    trend = np.zeros(n)
    seasonal = np.zeros(n)
    rho: np.ndarray | None = None
    for outer in range(ROBUST_ITERATIONS + 1):
        for _ in range(INNER_ITERATIONS):
            detrended = x - trend
            c = _seasonal_smooth(detrended, m, s_window, rho)
            seasonal = c[m : m + n] - _lowpass(c, m, l_window)
            trend = loess_regular(x - seasonal, t_window_, 1, rho, 0)
        if outer < ROBUST_ITERATIONS:
            rho = _bisquare_weights(x - trend - seasonal)

    remainder = (x - trend) - seasonal
    return StlDecomposition(trend, seasonal, remainder, m)
