"""Statistical tests used by the screening and feature layers.

Self-contained implementations (the test suite cross-checks them against
reference library results): Ljung-Box portmanteau test on the raw series,
augmented Dickey-Fuller unit-root test with the response-surface p-value
approximation for the constant-only regression, and the two-sided
Mann-Whitney U test under the normal approximation with tie correction.
"""

from __future__ import annotations

import math

import numpy as np
from scipy.special import gammaincc, ndtr


class DegenerateSeriesError(ValueError):
    """The series has no variance, so the statistic is undefined."""


def autocorrelations(x: np.ndarray, max_lag: int) -> np.ndarray:
    """Sample autocorrelations rho_1..rho_max_lag (biased denominator over all t)."""
    x = np.asarray(x, dtype=np.float64)
    n = x.shape[0]
    c = x - x.mean()
    denom = float(np.dot(c, c))
    if denom <= 0.0:
        raise DegenerateSeriesError("zero variance")
    acf = np.empty(max_lag)
    for k in range(1, max_lag + 1):
        acf[k - 1] = float(np.dot(c[k:], c[:-k])) / denom if k < n else 0.0
    return acf


def chi2_sf(q: float, df: int) -> float:
    """Chi-square survival function via the regularized upper incomplete gamma."""
    return float(gammaincc(df / 2.0, q / 2.0))


def ljung_box(x, lags) -> list:
    """Ljung-Box p-values of the white-noise null at each requested lag.

    Q_h = L(L+2) * sum_{k<=h} rho_k^2 / (L-k), compared against chi-square
    with h degrees of freedom (no fitted-model correction).
    """
    x = np.asarray(x, dtype=np.float64)
    lags = list(lags)
    if not lags or sorted(lags) != lags or lags[0] < 1:
        raise ValueError("lags must be a non-empty ascending list of positive integers")
    n = x.shape[0]
    if n <= max(lags):
        raise ValueError(f"series length {n} must exceed the largest lag {max(lags)}")
    acf = autocorrelations(x, max(lags))
    pvalues = []
    for h in lags:
        terms = acf[:h] ** 2 / (n - np.arange(1, h + 1))
        q = n * (n + 2.0) * float(terms.sum())
        pvalues.append(chi2_sf(q, h))
    return pvalues


# MacKinnon (1994) response-surface coefficients for the ADF t-statistic
# distribution, constant-only regression. p = Phi(polynomial(tau)) between the
# tail cutoffs.
_TAU_MAX = 2.74
_TAU_MIN = -18.83
_TAU_STAR = -1.61
_SMALLP = (2.1659, 1.4412, 0.038269)
_LARGEP = (1.7339, 0.93202, -0.12745, -0.010368)


def mackinnon_pvalue(tau: float) -> float:
    """Approximate p-value of an ADF t-statistic (constant, no trend)."""
    if tau > _TAU_MAX:
        return 1.0
    if tau < _TAU_MIN:
        return 0.0
    if tau <= _TAU_STAR:
        c = _SMALLP
        z = c[0] + c[1] * tau + c[2] * tau**2
    else:
        c = _LARGEP
        z = c[0] + c[1] * tau + c[2] * tau**2 + c[3] * tau**3
    return float(ndtr(z))


def schwert_lag(n: int) -> int:
    """Fixed lag-order rule floor(12 * (n/100)^(1/4))."""
    return int(math.floor(12.0 * (n / 100.0) ** 0.25))


def adf_test(x, max_lag: int | None = None):
    """Augmented Dickey-Fuller test with constant and fixed Schwert lag order.

    Regresses dy_t on [1, y_{t-1}, dy_{t-1}..dy_{t-p}] and returns
    (tau, p_value, p). Raises DegenerateSeriesError when the design matrix is
    singular (constant series).
    """
    y = np.asarray(x, dtype=np.float64)
    n = y.shape[0]
    if n < 20:
        raise ValueError("need at least 20 observations for the ADF test")
    p = schwert_lag(n) if max_lag is None else int(max_lag)
    dy = np.diff(y)
    nobs = dy.shape[0] - p
    if nobs < p + 3:
        p = max(0, dy.shape[0] - 4)
        nobs = dy.shape[0] - p

    rhs = [np.ones(nobs), y[p : p + nobs]]
    for i in range(1, p + 1):
        rhs.append(dy[p - i : p - i + nobs])
    X = np.column_stack(rhs)
    target = dy[p:]

    xtx = X.T @ X
    try:
        xtx_inv = np.linalg.inv(xtx)
    except np.linalg.LinAlgError as exc:
        raise DegenerateSeriesError("singular ADF regression") from exc
    cond = np.linalg.cond(xtx)
    if not np.isfinite(cond) or cond > 1e13:
        raise DegenerateSeriesError("singular ADF regression")

    beta = xtx_inv @ (X.T @ target)
    resid = target - X @ beta
    dof = nobs - X.shape[1]
    if dof < 1:
        raise DegenerateSeriesError("not enough observations for the lag order")
    sigma2 = float(resid @ resid) / dof
    se = math.sqrt(sigma2 * xtx_inv[1, 1])
    if se == 0.0 or not math.isfinite(se):
        raise DegenerateSeriesError("zero standard error in ADF regression")
    tau = float(beta[1]) / se
    return tau, mackinnon_pvalue(tau), p


def normal_sf(z: float) -> float:
    return float(ndtr(-z))


def mann_whitney_u(a, b):
    """Two-sided Mann-Whitney U via the normal approximation with tie correction.

    Returns (U of the first sample, p_value). No continuity correction.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    n1, n2 = a.shape[0], b.shape[0]
    if n1 == 0 or n2 == 0:
        raise ValueError("both samples must be non-empty")
    pooled = np.concatenate([a, b])
    order = np.argsort(pooled, kind="mergesort")
    ranks = np.empty(n1 + n2)
    ranks[order] = np.arange(1, n1 + n2 + 1)

    # average ranks over tie groups
    sorted_vals = pooled[order]
    i = 0
    tie_sizes = []
    while i < len(sorted_vals):
        j = i
        while j + 1 < len(sorted_vals) and sorted_vals[j + 1] == sorted_vals[i]:
            j += 1
        if j > i:
            avg = (i + j) / 2.0 + 1.0
            ranks[order[i : j + 1]] = avg
            tie_sizes.append(j - i + 1)
        i = j + 1

    r1 = float(ranks[:n1].sum())
    u1 = r1 - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    mu = n1 * n2 / 2.0
    tie_term = sum(t**3 - t for t in tie_sizes) / (n * (n - 1)) if n > 1 else 0.0
    sigma2 = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    if sigma2 <= 0:
        return u1, 1.0  # all values tied: no evidence of separation
    z = (u1 - mu) / math.sqrt(sigma2)
    p = 2.0 * normal_sf(abs(z))
    return u1, min(1.0, p)
