"""Compiled and pure kernels implement the same math; batch ops match the
per-sample operations they accelerate."""

import numpy as np
import pytest

import belfsc._kernels._purecore as pure
from belfsc.evidence import DirichletParams
from belfsc.losses import (
    LossConfig,
    bayes_risk,
    bayes_risk_batch,
    bel_gradient,
    bel_gradient_batch,
    kl_to_uniform,
    kl_to_uniform_batch,
    one_hot,
)

fast = pytest.importorskip(
    "belfsc._kernels._fastcore", reason="compiled kernel not built"
)


def random_alpha(rng, b=64, k=5):
    return rng.uniform(1.0, 60.0, size=(b, k))


class TestBackendsAgree:
    def test_scalar_functions(self):
        rng = np.random.default_rng(21)
        x = rng.uniform(1e-3, 1e3, size=5000)
        for name in ("ln_gamma_arr", "digamma_arr", "trigamma_arr"):
            np.testing.assert_allclose(
                getattr(fast, name)(x),
                getattr(pure, name)(x),
                rtol=1e-13,
                atol=1e-14,
                err_msg=name,
            )

    def test_batch_ops(self):
        rng = np.random.default_rng(22)
        alpha = random_alpha(rng)
        y = rng.integers(0, alpha.shape[1], size=alpha.shape[0]).astype(np.int64)
        np.testing.assert_allclose(
            fast.bayes_risk_batch(alpha, y), pure.bayes_risk_batch(alpha, y), rtol=1e-12
        )
        np.testing.assert_allclose(
            fast.kl_uniform_batch(alpha), pure.kl_uniform_batch(alpha), rtol=1e-11, atol=1e-12
        )
        for w in (0.0, 0.04, 1.0):
            np.testing.assert_allclose(
                fast.bel_grad_batch(alpha, y, w),
                pure.bel_grad_batch(alpha, y, w),
                rtol=1e-12,
                atol=1e-14,
            )

    def test_array_shapes_preserved(self):
        x = np.linspace(0.5, 9.5, 12).reshape(3, 4)
        assert fast.digamma_arr(x).shape == (3, 4)
        assert pure.digamma_arr(x).shape == (3, 4)


class TestBatchMatchesPerSample:
    def test_all_three(self):
        rng = np.random.default_rng(23)
        alpha = random_alpha(rng, b=32, k=4)
        y_idx = rng.integers(0, 4, size=32).astype(np.int64)
        w = 0.04
        risk = bayes_risk_batch(alpha, y_idx)
        kl = kl_to_uniform_batch(alpha)
        grad = bel_gradient_batch(alpha, y_idx, w)
        cfg = LossConfig(kl_weight=w)
        for i in range(32):
            p = DirichletParams(alpha[i])
            y = one_hot(int(y_idx[i]), 4)
            assert risk[i] == pytest.approx(bayes_risk(p, y), rel=1e-12)
            assert kl[i] == pytest.approx(kl_to_uniform(p), rel=1e-10, abs=1e-12)
            np.testing.assert_allclose(grad[i], bel_gradient(p, y, cfg), rtol=1e-12, atol=1e-13)
