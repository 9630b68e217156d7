"""Forecast-quality kernels: seasonal-naive baseline, MASE, and quantile-loss CRPS.

All operations are pure and reentrant. Undefined metrics (zero denominators)
are returned as None with a reason, never imputed; the evaluation layer
excludes them from aggregation and counts them.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import pandas as pd

QUANTILE_LEVELS = (0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9)


@dataclass(frozen=True)
class QuantileForecast:
    """H x 9 quantile predictions at levels 0.1..0.9, monotone across levels."""

    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        object.__setattr__(self, "values", values)
        if values.ndim != 2 or values.shape[1] != len(QUANTILE_LEVELS):
            raise ValueError("quantile forecast must be an H x 9 matrix")
        if np.isnan(values).any():
            raise ValueError("quantile forecast contains NaN")
        if np.any(np.diff(values, axis=1) < 0):
            raise ValueError("quantile forecast must be non-decreasing across levels")

    @property
    def horizon(self) -> int:
        return self.values.shape[0]

    @property
    def median_track(self) -> np.ndarray:
        return self.values[:, 4]


@dataclass(frozen=True)
class WindowScore:
    """Window-level metric pair; None values carry the reason they are undefined."""

    mase: float | None
    crps: float | None
    mase_undefined: str | None = None
    crps_undefined: str | None = None
    diagnostics: tuple = ()


def _fill(context: np.ndarray) -> np.ndarray:
    context = np.asarray(context, dtype=np.float64)
    if np.isnan(context).any():
        context = pd.Series(context).ffill().bfill().to_numpy(dtype=np.float64)
    return context


def seasonal_naive(context, s: int, horizon: int):
    """Repeat the last observed seasonal cycle; degenerate quantiles.

    All nine quantile levels equal the point forecast, which makes the
    baseline's CRPS a well-defined scaled absolute error. A context shorter
    than the period falls back to last-value naive (s=1) and records it.

    Returns (QuantileForecast, diagnostics).
    """
    context = _fill(context)
    if context.shape[0] == 0 or np.isnan(context).all():
        raise ValueError("seasonal naive needs at least one observed context value")
    diagnostics = ()
    if context.shape[0] < s:
        diagnostics = ("context-shorter-than-period",)
        s = 1
    n = context.shape[0]
    steps = np.arange(horizon)
    point = context[n - s + (steps % s)]
    return QuantileForecast(np.tile(point[:, None], (1, len(QUANTILE_LEVELS)))), diagnostics


def mase_value(y, yhat, s: int, context=None):
    """MASE of one variate's window: (value, undefined_reason, diagnostics).

    The denominator uses in-window seasonal differences when H > s; otherwise
    it falls back to differences against the trailing context at lag s (lag 1
    when the context is shorter than one period).
    """
    y = np.asarray(y, dtype=np.float64)
    yhat = np.asarray(yhat, dtype=np.float64)
    h = y.shape[0]
    if h < 1 or yhat.shape[0] != h:
        raise ValueError("truth and forecast must share a positive horizon")
    if np.isnan(y).any():
        return None, "missing-truth", ()

    numerator = float(np.abs(y - yhat).mean())
    diagnostics = ()
    if h > s:
        denominator = float(np.abs(y[s:] - y[:-s]).mean())
    else:
        if context is None or len(context) == 0:
            return None, "no-context", ()
        ctx = _fill(context)
        s_used = s
        if ctx.shape[0] < s:
            s_used = 1
            diagnostics = ("context-shorter-than-period",)
        combined = np.concatenate([ctx, y])
        n = ctx.shape[0]
        lookback = combined[n - s_used : n - s_used + h]
        denominator = float(np.abs(y - lookback).mean())
    if denominator == 0.0:
        return None, "zero-denominator", diagnostics
    return numerator / denominator, None, diagnostics


def mase(Y, Yhat, s: int, context=None):
    """Per-variate MASE over H x D truth and median-forecast matrices."""
    Y = np.atleast_2d(np.asarray(Y, dtype=np.float64).T).T
    Yhat = np.atleast_2d(np.asarray(Yhat, dtype=np.float64).T).T
    ctx = None if context is None else np.atleast_2d(np.asarray(context, dtype=np.float64).T).T
    out = []
    for d in range(Y.shape[1]):
        col_ctx = None if ctx is None else ctx[:, d]
        out.append(mase_value(Y[:, d], Yhat[:, d], s, col_ctx))
    return out


def pinball_loss(q: float, alpha: float, y: float) -> float:
    """Quantile (pinball) loss: (alpha - 1{y < q}) * (y - q)."""
    return (alpha - (1.0 if y < q else 0.0)) * (y - q)


def crps_value(y, forecast: QuantileForecast):
    """Quantile-loss CRPS of one variate's window: (value, undefined_reason).

    Mean over the nine levels of the weighted quantile loss
    2 * sum_i pinball(q_i, y_i) / sum_i |y_i|.
    """
    y = np.asarray(y, dtype=np.float64)
    if y.shape[0] != forecast.horizon:
        raise ValueError("truth and forecast horizons differ")
    if np.isnan(y).any():
        return None, "missing-truth"
    abs_sum = float(np.abs(y).sum())
    if abs_sum == 0.0:
        return None, "zero-truth-abs"
    levels = np.asarray(QUANTILE_LEVELS)
    q = forecast.values
    indicator = (y[:, None] < q).astype(np.float64)
    losses = (levels[None, :] - indicator) * (y[:, None] - q)
    wql = 2.0 * losses.sum(axis=0) / abs_sum
    return float(wql.mean()), None


def samples_to_quantiles(samples) -> QuantileForecast:
    """Convert per-step Monte-Carlo samples (H x n) to the nine quantile levels.

    Linear interpolation at position (n-1)*p within the sorted samples, so
    the output is monotone by construction.
    """
    samples = np.asarray(samples, dtype=np.float64)
    if samples.ndim != 2:
        raise ValueError("samples must be an H x n matrix")
    if samples.shape[1] < 2:
        raise ValueError("need at least 2 samples per step")
    values = np.quantile(samples, QUANTILE_LEVELS, axis=1, method="linear").T
    return QuantileForecast(values)
