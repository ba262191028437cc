"""Pure-numpy fallback for the hot kernels.

Same algorithms and coefficient tables as the compiled core
(``_fastcore.pyx``): recurrence shifting to x >= 10 followed by the
asymptotic series, and a reduced Taylor series through the zeros of
ln(Gamma) at x = 1 and x = 2 so relative accuracy survives there.

All functions assume strictly positive, finite input; validation lives in
:mod:`belfsc.specfun` and in the callers that own the invariants.
"""

import numpy as np

from belfsc._kernels._coeffs import (
    DIGAMMA_ASYMP,
    EULER_GAMMA,
    HALF_LOG_TWO_PI,
    LGAMMA_STIRLING,
    SHIFT_THRESHOLD,
    TRIGAMMA_ASYMP,
    ZETA_REDUCED,
)

BACKEND_NAME = "pure"


def _horner(coeffs, z):
    acc = np.zeros_like(z)
    for c in reversed(coeffs):
        acc = acc * z + c
    return acc


def _zeta_tail(t):
    # sum_{k=2}^{32} ZETA_REDUCED[k-2] t^k, |t| <= 0.5
    return t * t * _horner(ZETA_REDUCED, t)


def _lgamma_stirling(w):
    z = 1.0 / (w * w)
    series = _horner(LGAMMA_STIRLING, z) / w
    return (w - 0.5) * np.log(w) - w + HALF_LOG_TWO_PI + series


def ln_gamma_arr(x):
    x = np.asarray(x, dtype=np.float64)
    out = np.empty_like(x)

    small = x < 0.5
    near1 = (x >= 0.5) & (x < 1.5)
    near2 = (x >= 1.5) & (x < 2.5)
    large = x >= 2.5

    if small.any():
        t = x[small]  # ln G(x) = ln G(1+t) - ln t with t = x
        out[small] = (
            -EULER_GAMMA * t + (t - np.log1p(t)) + _zeta_tail(t) - np.log(t)
        )
    if near1.any():
        t = x[near1] - 1.0
        out[near1] = -EULER_GAMMA * t + (t - np.log1p(t)) + _zeta_tail(t)
    if near2.any():
        t = x[near2] - 2.0
        out[near2] = (1.0 - EULER_GAMMA) * t + _zeta_tail(t)
    if large.any():
        w = x[large].copy()
        acc = np.zeros_like(w)
        for _ in range(8):  # 2.5 -> >=10 takes at most 8 unit shifts
            mask = w < SHIFT_THRESHOLD
            if not mask.any():
                break
            acc[mask] += np.log(w[mask])
            w[mask] += 1.0
        out[large] = _lgamma_stirling(w) - acc
    return out


def digamma_arr(x):
    x = np.asarray(x, dtype=np.float64)
    w = x.astype(np.float64).copy()
    acc = np.zeros_like(w)
    for _ in range(10):  # any x > 0 reaches the threshold in <= 10 shifts
        mask = w < SHIFT_THRESHOLD
        if not mask.any():
            break
        acc[mask] -= 1.0 / w[mask]
        w[mask] += 1.0
    z = 1.0 / (w * w)
    return acc + np.log(w) - 0.5 / w - z * _horner(DIGAMMA_ASYMP, z)


def trigamma_arr(x):
    x = np.asarray(x, dtype=np.float64)
    w = x.astype(np.float64).copy()
    acc = np.zeros_like(w)
    for _ in range(10):
        mask = w < SHIFT_THRESHOLD
        if not mask.any():
            break
        acc[mask] += 1.0 / (w[mask] * w[mask])
        w[mask] += 1.0
    z = 1.0 / (w * w)
    return acc + 1.0 / w + 0.5 * z + (z / w) * _horner(TRIGAMMA_ASYMP, z)


def ln_gamma(x):
    return float(ln_gamma_arr(np.array([x]))[0])


def digamma(x):
    return float(digamma_arr(np.array([x]))[0])


def trigamma(x):
    return float(trigamma_arr(np.array([x]))[0])


# ---------------------------------------------------------------------------
# Fused batch kernels over Dirichlet parameter rows (the training hot path).
# alpha: (B, K) with every entry >= 1; y_idx: (B,) int64 true-class indices.
# ---------------------------------------------------------------------------


def bayes_risk_batch(alpha, y_idx):
    alpha = np.asarray(alpha, dtype=np.float64)
    strength = alpha.sum(axis=1)
    alpha_true = alpha[np.arange(alpha.shape[0]), y_idx]
    return digamma_arr(strength) - digamma_arr(alpha_true)


def kl_uniform_batch(alpha):
    alpha = np.asarray(alpha, dtype=np.float64)
    k = alpha.shape[1]
    strength = alpha.sum(axis=1)
    lg_alpha = ln_gamma_arr(alpha.ravel()).reshape(alpha.shape)
    dg_alpha = digamma_arr(alpha.ravel()).reshape(alpha.shape)
    dg_strength = digamma_arr(strength)
    log_norm = ln_gamma_arr(strength) - ln_gamma(float(k)) - lg_alpha.sum(axis=1)
    tilt = ((alpha - 1.0) * (dg_alpha - dg_strength[:, None])).sum(axis=1)
    return log_norm + tilt


def bel_grad_batch(alpha, y_idx, kl_weight):
    alpha = np.asarray(alpha, dtype=np.float64)
    b, k = alpha.shape
    strength = alpha.sum(axis=1)
    y = np.zeros_like(alpha)
    y[np.arange(b), y_idx] = 1.0
    tg_alpha = trigamma_arr(alpha.ravel()).reshape(alpha.shape)
    tg_strength = trigamma_arr(strength)
    per_class = tg_alpha * (-y + kl_weight * (alpha - 1.0))
    shared = tg_strength * (1.0 - kl_weight * (strength - k))
    return per_class + shared[:, None]
