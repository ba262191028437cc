# cython: boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels: scalar special functions plus fused batch loss ops.

Mirrors belfsc._kernels._purecore (same algorithms, same coefficient
tables); the pure module is the import-time fallback when this extension
is unavailable.
"""

from libc.math cimport log, log1p

import numpy as np

from belfsc._kernels import _coeffs

BACKEND_NAME = "compiled"

cdef double EULER_GAMMA = _coeffs.EULER_GAMMA
cdef double HALF_LOG_TWO_PI = _coeffs.HALF_LOG_TWO_PI
cdef double SHIFT = _coeffs.SHIFT_THRESHOLD

cdef double[31] D_ZETA
cdef double[7] D_LG
cdef double[7] D_DG
cdef double[7] D_TG

for _i, _v in enumerate(_coeffs.ZETA_REDUCED):
    D_ZETA[_i] = _v
for _i, _v in enumerate(_coeffs.LGAMMA_STIRLING):
    D_LG[_i] = _v
for _i, _v in enumerate(_coeffs.DIGAMMA_ASYMP):
    D_DG[_i] = _v
for _i, _v in enumerate(_coeffs.TRIGAMMA_ASYMP):
    D_TG[_i] = _v


cdef inline double _zeta_tail(double t) noexcept nogil:
    cdef double acc = 0.0
    cdef int i
    for i in range(30, -1, -1):
        acc = acc * t + D_ZETA[i]
    return t * t * acc


cdef double ln_gamma_c(double x) noexcept nogil:
    cdef double t, w, acc, z, series
    cdef int i
    if x < 0.5:
        t = x
        return -EULER_GAMMA * t + (t - log1p(t)) + _zeta_tail(t) - log(t)
    if x < 1.5:
        t = x - 1.0
        return -EULER_GAMMA * t + (t - log1p(t)) + _zeta_tail(t)
    if x < 2.5:
        t = x - 2.0
        return (1.0 - EULER_GAMMA) * t + _zeta_tail(t)
    w = x
    acc = 0.0
    while w < SHIFT:
        acc += log(w)
        w += 1.0
    z = 1.0 / (w * w)
    series = 0.0
    for i in range(6, -1, -1):
        series = series * z + D_LG[i]
    return (w - 0.5) * log(w) - w + HALF_LOG_TWO_PI + series / w - acc


cdef double digamma_c(double x) noexcept nogil:
    cdef double w = x
    cdef double acc = 0.0
    cdef double z, series
    cdef int i
    while w < SHIFT:
        acc -= 1.0 / w
        w += 1.0
    z = 1.0 / (w * w)
    series = 0.0
    for i in range(6, -1, -1):
        series = series * z + D_DG[i]
    return acc + log(w) - 0.5 / w - z * series


cdef double trigamma_c(double x) noexcept nogil:
    cdef double w = x
    cdef double acc = 0.0
    cdef double z, series
    cdef int i
    while w < SHIFT:
        acc += 1.0 / (w * w)
        w += 1.0
    z = 1.0 / (w * w)
    series = 0.0
    for i in range(6, -1, -1):
        series = series * z + D_TG[i]
    return acc + 1.0 / w + 0.5 * z + (z / w) * series


def ln_gamma(double x):
    return ln_gamma_c(x)


def digamma(double x):
    return digamma_c(x)


def trigamma(double x):
    return trigamma_c(x)


def ln_gamma_arr(x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = ln_gamma_c(xv[i])
    return out.reshape(np.shape(x))


def digamma_arr(x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = digamma_c(xv[i])
    return out.reshape(np.shape(x))


def trigamma_arr(x):
    cdef double[::1] xv = np.ascontiguousarray(x, dtype=np.float64).ravel()
    out = np.empty(xv.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i
    for i in range(xv.shape[0]):
        ov[i] = trigamma_c(xv[i])
    return out.reshape(np.shape(x))


def bayes_risk_batch(alpha, y_idx):
    cdef double[:, ::1] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef long long[::1] y = np.ascontiguousarray(y_idx, dtype=np.int64)
    out = np.empty(a.shape[0], dtype=np.float64)
    cdef double[::1] ov = out
    cdef Py_ssize_t i, j
    cdef double s
    for i in range(a.shape[0]):
        s = 0.0
        for j in range(a.shape[1]):
            s += a[i, j]
        ov[i] = digamma_c(s) - digamma_c(a[i, y[i]])
    return out


def kl_uniform_batch(alpha):
    cdef double[:, ::1] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef Py_ssize_t b = a.shape[0], k = a.shape[1]
    out = np.empty(b, dtype=np.float64)
    cdef double[::1] ov = out
    cdef double lg_k = ln_gamma_c(<double> k)
    cdef Py_ssize_t i, j
    cdef double s, acc, dg_s
    for i in range(b):
        s = 0.0
        for j in range(k):
            s += a[i, j]
        dg_s = digamma_c(s)
        acc = ln_gamma_c(s) - lg_k
        for j in range(k):
            acc -= ln_gamma_c(a[i, j])
            acc += (a[i, j] - 1.0) * (digamma_c(a[i, j]) - dg_s)
        ov[i] = acc
    return out


def bel_grad_batch(alpha, y_idx, double kl_weight):
    cdef double[:, ::1] a = np.ascontiguousarray(alpha, dtype=np.float64)
    cdef long long[::1] y = np.ascontiguousarray(y_idx, dtype=np.int64)
    cdef Py_ssize_t b = a.shape[0], k = a.shape[1]
    out = np.empty((b, k), dtype=np.float64)
    cdef double[:, ::1] ov = out
    cdef Py_ssize_t i, j
    cdef double s, shared, yj
    for i in range(b):
        s = 0.0
        for j in range(k):
            s += a[i, j]
        shared = trigamma_c(s) * (1.0 - kl_weight * (s - k))
        for j in range(k):
            yj = 1.0 if j == y[i] else 0.0
            ov[i, j] = trigamma_c(a[i, j]) * (-yj + kl_weight * (a[i, j] - 1.0)) + shared
    return out
