# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: loess smoothing and rolling quartiles.

Semantics are defined jointly with ``fallback.py``; the fallback is the
readable reference, this module is the fast path. ``rolling_quartiles``
reproduces NumPy's linear-interpolation quantile bit for bit (including the
lerp branch at t >= 0.5) so either implementation yields identical pipelines.
"""

import numpy as np

cimport numpy as cnp
from libc.math cimport fabs, floor, sqrt
from libc.string cimport memmove

cnp.import_array()


cdef inline double _tricube(double u) nogil:
    cdef double v = 1.0 - u * u * u
    return v * v * v


def loess_regular(y, q, degree, rho=None, ext=0):
    """Loess smooth at integer positions -ext .. n-1+ext; see fallback docs."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] yv = np.ascontiguousarray(y, dtype=np.float64)
    cdef Py_ssize_t n = yv.shape[0]
    if n == 0:
        raise ValueError("empty input")
    if q < 1:
        raise ValueError("window must be >= 1")

    cdef bint use_rho = rho is not None
    cdef cnp.ndarray[cnp.float64_t, ndim=1] rv
    if use_rho:
        rv = np.ascontiguousarray(rho, dtype=np.float64)
    else:
        rv = np.empty(0, dtype=np.float64)

    cdef Py_ssize_t qq = q
    cdef Py_ssize_t q_eff = qq if qq < n else n
    cdef Py_ssize_t n_ext = ext
    cdef Py_ssize_t m = n + 2 * n_ext
    cdef cnp.ndarray[cnp.float64_t, ndim=1] out = np.empty(m, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] w = np.empty(q_eff, dtype=np.float64)

    cdef Py_ssize_t k, j, lo, g, nearest
    cdef double h, h9, h1, r, a, ax, c, b, fit, wj, dx
    cdef double range_n = <double>(n - 1)

    for k in range(m):
        g = k - n_ext
        lo = g + 1 - (q_eff + 1) // 2
        if lo < 0:
            lo = 0
        elif lo > n - q_eff:
            lo = n - q_eff

        h = <double>(g - lo)
        r = <double>(lo + q_eff - 1 - g)
        if r > h:
            h = r
        if qq > n:
            h = h + (qq - n) / 2.0
        h9 = 0.999 * h
        h1 = 0.001 * h

        a = 0.0
        for j in range(q_eff):
            r = fabs(<double>(lo + j - g))
            if r <= h9:
                if r <= h1:
                    wj = 1.0
                else:
                    wj = _tricube(r / h)
                if use_rho:
                    wj = wj * rv[lo + j]
            else:
                wj = 0.0
            w[j] = wj
            a = a + wj

        if a <= 0.0:
            nearest = g
            if nearest < 0:
                nearest = 0
            elif nearest > n - 1:
                nearest = n - 1
            out[k] = yv[nearest]
            continue

        for j in range(q_eff):
            w[j] = w[j] / a

        if degree >= 1 and h > 0.0:
            ax = 0.0
            for j in range(q_eff):
                ax = ax + w[j] * <double>(lo + j)
            c = 0.0
            for j in range(q_eff):
                dx = <double>(lo + j) - ax
                c = c + w[j] * dx * dx
            if sqrt(c if c > 0.0 else 0.0) > 0.001 * range_n:
                b = (<double>g - ax) / c
                for j in range(q_eff):
                    w[j] = w[j] * (b * (<double>(lo + j) - ax) + 1.0)

        fit = 0.0
        for j in range(q_eff):
            fit = fit + w[j] * yv[lo + j]
        out[k] = fit

    return out


cdef inline Py_ssize_t _lower_bound(double* buf, Py_ssize_t size, double v) nogil:
    cdef Py_ssize_t lo = 0, hi = size, mid
    while lo < hi:
        mid = (lo + hi) // 2
        if buf[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo


cdef inline double _quantile_sorted(double* buf, Py_ssize_t size, double p) nogil:
    # NumPy linear method: virtual index p*(size-1), lerp with the t>=0.5 branch.
    cdef double pos = p * <double>(size - 1)
    cdef Py_ssize_t lo = <Py_ssize_t>floor(pos)
    cdef double t = pos - <double>lo
    cdef double a = buf[lo]
    cdef double b
    if lo + 1 < size:
        b = buf[lo + 1]
    else:
        return a
    cdef double diff = b - a
    if t >= 0.5:
        return b - diff * (1.0 - t)
    return a + diff * t


def rolling_quartiles(x, window):
    """Centred rolling (median, q25, q75), boundary windows clipped; see fallback."""
    cdef cnp.ndarray[cnp.float64_t, ndim=1] xv = np.ascontiguousarray(x, dtype=np.float64)
    cdef Py_ssize_t n = xv.shape[0]
    cdef Py_ssize_t win = window
    if win < 1:
        raise ValueError("window must be >= 1")
    cdef Py_ssize_t half = (win - 1) // 2

    cdef cnp.ndarray[cnp.float64_t, ndim=1] med = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q25 = np.empty(n, dtype=np.float64)
    cdef cnp.ndarray[cnp.float64_t, ndim=1] q75 = np.empty(n, dtype=np.float64)
    if n == 0:
        return med, q25, q75

    cdef cnp.ndarray[cnp.float64_t, ndim=1] scratch = np.empty(min(n, 2 * half + 1), dtype=np.float64)
    cdef double* buf = <double*>scratch.data
    cdef Py_ssize_t size = 0
    cdef Py_ssize_t t, pos, hi0
    cdef double v

    # Seed with the window of t = 0: x[0 .. min(half, n-1)].
    hi0 = half if half < n - 1 else n - 1
    for t in range(hi0 + 1):
        v = xv[t]
        pos = _lower_bound(buf, size, v)
        memmove(buf + pos + 1, buf + pos, (size - pos) * sizeof(double))
        buf[pos] = v
        size += 1

    med[0] = _quantile_sorted(buf, size, 0.5)
    q25[0] = _quantile_sorted(buf, size, 0.25)
    q75[0] = _quantile_sorted(buf, size, 0.75)

    for t in range(1, n):
        if t - half - 1 >= 0:
            v = xv[t - half - 1]
            pos = _lower_bound(buf, size, v)
            memmove(buf + pos, buf + pos + 1, (size - pos - 1) * sizeof(double))
            size -= 1
        if t + half < n:
            v = xv[t + half]
            pos = _lower_bound(buf, size, v)
            memmove(buf + pos + 1, buf + pos, (size - pos) * sizeof(double))
            buf[pos] = v
            size += 1
        med[t] = _quantile_sorted(buf, size, 0.5)
        q25[t] = _quantile_sorted(buf, size, 0.25)
        q75[t] = _quantile_sorted(buf, size, 0.75)

    return med, q25, q75
