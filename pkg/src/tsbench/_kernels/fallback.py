"""Pure-NumPy implementations of the hot kernels.

Mirrors the compiled extension in ``_native.pyx`` operation for operation;
``rolling_quartiles`` is bitwise-identical to the native kernel, ``loess_regular``
agrees to floating-point accumulation order. Selected at import time by
``tsbench._kernels`` when the extension is unavailable or explicitly disabled.
"""

from __future__ import annotations

import numpy as np

# Evaluate loess in position blocks to bound the (block x window) scratch matrix.
_BLOCK = 4096


def _window_starts(g: np.ndarray, q_eff: int, n: int) -> np.ndarray:
    # Nearest-q_eff contiguous window: slide so the eval point sits at or left
    # of the window midpoint, clipped to the series.
    lo = g + 1 - (q_eff + 1) // 2
    return np.clip(lo, 0, n - q_eff)


def loess_regular(y, q, degree, rho=None, ext=0):
    """Loess smooth of an equally spaced series at integer positions.

    Args:
        y: input values, shape (n,).
        q: smoothing window size (number of nearest neighbours); may exceed n.
        degree: 0 (local constant) or 1 (local linear).
        rho: optional robustness weights, shape (n,).
        ext: number of positions to extrapolate at each end.

    Returns:
        Fitted values at positions -ext .. n-1+ext, shape (n + 2*ext,).
    """
    y = np.ascontiguousarray(y, dtype=np.float64)
    n = y.shape[0]
    if n == 0:
        raise ValueError("empty input")
    if q < 1:
        raise ValueError("window must be >= 1")
    if rho is not None:
        rho = np.ascontiguousarray(rho, dtype=np.float64)

    q_eff = min(q, n)
    positions = np.arange(-ext, n + ext, dtype=np.int64)
    out = np.empty(positions.shape[0], dtype=np.float64)

    for s in range(0, positions.shape[0], _BLOCK):
        g = positions[s : s + _BLOCK]
        lo = _window_starts(g, q_eff, n)
        idx = lo[:, None] + np.arange(q_eff)[None, :]
        dist = np.abs(idx - g[:, None]).astype(np.float64)
        h = np.maximum(g - lo, lo + q_eff - 1 - g).astype(np.float64)
        if q > n:
            h = h + (q - n) / 2.0
        h9 = 0.999 * h[:, None]
        h1 = 0.001 * h[:, None]

        with np.errstate(divide="ignore", invalid="ignore"):
            u = np.where(h[:, None] > 0, dist / h[:, None], 0.0)
        w = (1.0 - u**3) ** 3
        w[dist > h9] = 0.0
        w[dist <= h1] = 1.0
        if rho is not None:
            w = w * rho[idx]

        a = w.sum(axis=1)
        degenerate = a <= 0.0
        a_safe = np.where(degenerate, 1.0, a)
        w = w / a_safe[:, None]

        if degree >= 1:
            ax = (w * idx).sum(axis=1)
            dx = idx - ax[:, None]
            c = (w * dx * dx).sum(axis=1)
            use = (h > 0) & (np.sqrt(np.maximum(c, 0.0)) > 0.001 * (n - 1))
            b = np.where(use, (g - ax) / np.where(use, c, 1.0), 0.0)
            w = w * (b[:, None] * dx + 1.0)

        fit = (w * y[idx]).sum(axis=1)
        if degenerate.any():
            nearest = np.clip(g[degenerate], 0, n - 1)
            fit[degenerate] = y[nearest]
        out[s : s + _BLOCK] = fit

    return out


def rolling_quartiles(x, window):
    """Centred rolling (median, q25, q75) with boundary-clipped windows.

    Quartiles use linear interpolation at position (k-1)*p within the sorted
    window of k values.

    Returns:
        Tuple of three arrays (median, q25, q75), each shape (n,).
    """
    x = np.ascontiguousarray(x, dtype=np.float64)
    n = x.shape[0]
    if window < 1:
        raise ValueError("window must be >= 1")
    half = (window - 1) // 2

    med = np.empty(n)
    q25 = np.empty(n)
    q75 = np.empty(n)

    full_lo = half
    full_hi = n - half  # first index whose window is clipped on the right
    if full_hi > full_lo and 2 * half + 1 <= n:
        win = np.lib.stride_tricks.sliding_window_view(x, 2 * half + 1)
        qs = np.quantile(win, [0.5, 0.25, 0.75], axis=1, method="linear")
        med[full_lo:full_hi] = qs[0]
        q25[full_lo:full_hi] = qs[1]
        q75[full_lo:full_hi] = qs[2]
    else:
        full_lo, full_hi = 0, 0

    for t in list(range(0, full_lo)) + list(range(max(full_hi, 0), n)):
        seg = x[max(0, t - half) : min(n, t + half + 1)]
        med[t], q25[t], q75[t] = np.quantile(seg, [0.5, 0.25, 0.75], method="linear")

    return med, q25, q75
