"""Evidential classification loss and baselines.

The evidential loss on Dirichlet parameters alpha is

    L(alpha, y) = [psi(S) - psi(alpha_true)] + w * KL[Dir(alpha) || Dir(1)]

whose exact gradient is

    dL/dalpha_k = psi'(alpha_k) [-y_k + w (alpha_k - 1)]
                  + psi'(S) [1 - w (S - K)],

vanishing at the smooth optimum alpha* = 1 + y / w.  The 1/x trigamma
approximation of the shared term is kept only as a diagnostic: it splits
off an uncertainty-proportional component (w*K + 1)/S that shows why
high-uncertainty samples get larger updates.

Softmax cross entropy and label smoothing are provided for the baselines.
The label-smoothing gradient is the actual derivative of its loss,
softmax(z) - [(1 - eps) y + eps/K].

Per-sample functions route through :mod:`belfsc.specfun`; the *_batch
variants call the fused kernel backend directly and are the training hot
path (equivalence is covered by tests).
"""

from dataclasses import dataclass

import numpy as np

from belfsc import _kernels, specfun
from belfsc.evidence import DirichletParams, Evidence, evidence_to_params
from belfsc.fusion import FusionConfig, fuse_evidence


@dataclass(frozen=True)
class LossConfig:
    kl_weight: float = 0.04  # lambda
    anneal_epochs: int = 0  # 0 disables the optional linear ramp from 0

    def __post_init__(self):
        if not np.isfinite(self.kl_weight) or self.kl_weight < 0.0:
            raise ValueError("kl_weight must be finite and >= 0")
        if self.anneal_epochs < 0:
            raise ValueError("anneal_epochs must be >= 0")

    def kl_weight_at(self, epoch):
        """Effective KL weight at a 0-based epoch under the optional ramp."""
        if self.anneal_epochs <= 0:
            return self.kl_weight
        return self.kl_weight * min(1.0, (epoch + 1) / self.anneal_epochs)


@dataclass(frozen=True)
class LossValue:
    total: float
    bayes_risk: float
    kl: float  # unweighted; total == bayes_risk + kl_weight * kl


def one_hot(label, num_classes):
    y = np.zeros(num_classes)
    y[label] = 1.0
    return y


def _true_class(y, num_classes):
    y = np.asarray(y, dtype=np.float64)
    if y.shape != (num_classes,):
        raise ValueError(f"label has shape {y.shape}, expected ({num_classes},)")
    if not np.all((y == 0.0) | (y == 1.0)) or y.sum() != 1.0:
        raise ValueError("label must be one-hot")
    return int(np.argmax(y))


def bayes_risk(p: DirichletParams, y) -> float:
    """Expected cross entropy under Dir(alpha): psi(S) - psi(alpha_true)."""
    true = _true_class(y, p.num_classes)
    return specfun.digamma(p.strength) - specfun.digamma(float(p.alpha[true]))


def kl_to_uniform(p: DirichletParams) -> float:
    """KL[Dir(alpha) || Dir(1, ..., 1)]; zero iff alpha is all ones."""
    dg_s = specfun.digamma(p.strength)
    acc = specfun.ln_gamma(p.strength) - specfun.ln_gamma(float(p.num_classes))
    for a in p.alpha:
        a = float(a)
        acc -= specfun.ln_gamma(a)
        acc += (a - 1.0) * (specfun.digamma(a) - dg_s)
    return acc


def bel_loss(
    prior_e: Evidence,
    meta_e: Evidence,
    y,
    fusion: FusionConfig,
    cfg: LossConfig,
) -> LossValue:
    """Fuse prior and observed evidence, then score the fused Dirichlet.

    Per-sample value; averaging over a query batch is the caller's mean.
    """
    params = evidence_to_params(fuse_evidence(prior_e, meta_e, fusion))
    risk = bayes_risk(params, y)
    kl = kl_to_uniform(params)
    return LossValue(total=risk + cfg.kl_weight * kl, bayes_risk=risk, kl=kl)


def bel_gradient(p: DirichletParams, y, cfg: LossConfig) -> np.ndarray:
    """Exact dL/dalpha of bayes_risk + kl_weight * kl_to_uniform."""
    true = _true_class(y, p.num_classes)
    w = cfg.kl_weight
    k = p.num_classes
    s = p.strength
    shared = specfun.trigamma(s) * (1.0 - w * (s - k))
    grad = np.empty(k)
    for j in range(k):
        a = float(p.alpha[j])
        yj = 1.0 if j == true else 0.0
        grad[j] = specfun.trigamma(a) * (-yj + w * (a - 1.0)) + shared
    return grad


@dataclass(frozen=True)
class ApproxGradient:
    gradient: np.ndarray
    uncertainty_term: float  # (kl_weight*K + 1) / S, proportional to u = K/S


def bel_gradient_approx(p: DirichletParams, y, cfg: LossConfig) -> ApproxGradient:
    """Diagnostic gradient with psi'(S) ~ 1/S applied to the shared term.

    Converges to :func:`bel_gradient` as S grows; kept for logging the
    uncertainty-proportional component, not for training.
    """
    true = _true_class(y, p.num_classes)
    w = cfg.kl_weight
    k = p.num_classes
    s = p.strength
    uncertainty_term = (w * k + 1.0) / s
    shared = -w + uncertainty_term
    grad = np.empty(k)
    for j in range(k):
        a = float(p.alpha[j])
        yj = 1.0 if j == true else 0.0
        grad[j] = specfun.trigamma(a) * (-yj + w * (a - 1.0)) + shared
    return ApproxGradient(gradient=grad, uncertainty_term=uncertainty_term)


def alpha_gradient_descent(
    y,
    cfg: LossConfig,
    start=None,
    step=None,
    max_iters=200_000,
    grad_tol=1e-10,
):
    """Plain projected gradient descent directly in alpha space.

    Demonstrates the smooth optimization target: from a mildly informed
    start the iterates converge to alpha* = 1 + y / kl_weight.  Projection
    clips alpha at the domain boundary 1.
    """
    y = np.asarray(y, dtype=np.float64)
    k = y.shape[0]
    if cfg.kl_weight <= 0.0:
        raise ValueError("alpha_gradient_descent requires kl_weight > 0")
    alpha = np.full(k, 2.0) if start is None else np.asarray(start, dtype=np.float64).copy()
    if step is None:
        # stays stable both near the start (curvature ~ |psi''(2)|) and at
        # the boundary alpha=1 (curvature ~ psi'(1)*kl_weight)
        step = 1.8 / (0.5 + 1.7 * cfg.kl_weight)
    y_idx = np.array([int(np.argmax(y))], dtype=np.int64)
    for _ in range(max_iters):
        grad = _kernels.bel_grad_batch(alpha[None, :], y_idx, cfg.kl_weight)[0]
        alpha = np.maximum(alpha - step * grad, 1.0)
        if np.max(np.abs(grad)) < grad_tol:
            break
    return DirichletParams(alpha)


# ---------------------------------------------------------------------------
# Softmax cross entropy and label smoothing baselines
# ---------------------------------------------------------------------------


def softmax(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def log_softmax(z):
    z = np.asarray(z, dtype=np.float64)
    shifted = z - z.max(axis=-1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=-1, keepdims=True))


def softmax_ce_loss(z, y) -> float:
    true = _true_class(y, np.asarray(z).shape[-1])
    return float(-log_softmax(z)[true])


def softmax_ce_gradient(z, y) -> np.ndarray:
    """dCE/dz = softmax(z) - y; components sum to zero."""
    z = np.asarray(z, dtype=np.float64)
    if not np.all(np.isfinite(z)):
        raise ValueError("logits must be finite")
    _true_class(y, z.shape[-1])
    return softmax(z) - np.asarray(y, dtype=np.float64)


def _check_smoothing(epsilon):
    if not 0.0 <= epsilon < 1.0:
        raise ValueError("smoothing factor must be in [0, 1)")


def label_smooth_loss(z, y, epsilon) -> float:
    """(1 - eps) * CE(y, p) + eps * CE(uniform, p) with p = softmax(z)."""
    _check_smoothing(epsilon)
    z = np.asarray(z, dtype=np.float64)
    true = _true_class(y, z.shape[-1])
    logp = log_softmax(z)
    ce_true = -logp[true]
    ce_uniform = -logp.mean()
    return float((1.0 - epsilon) * ce_true + epsilon * ce_uniform)


def label_smooth_gradient(z, y, epsilon) -> np.ndarray:
    """Derivative of label_smooth_loss: softmax(z) - [(1-eps) y + eps/K]."""
    _check_smoothing(epsilon)
    z = np.asarray(z, dtype=np.float64)
    k = z.shape[-1]
    _true_class(y, k)
    target = (1.0 - epsilon) * np.asarray(y, dtype=np.float64) + epsilon / k
    return softmax(z) - target


# ---------------------------------------------------------------------------
# Batched kernel paths (training hot loop)
# ---------------------------------------------------------------------------


def bayes_risk_batch(alpha, y_idx):
    return _kernels.bayes_risk_batch(alpha, y_idx)


def kl_to_uniform_batch(alpha):
    return _kernels.kl_uniform_batch(alpha)


def bel_gradient_batch(alpha, y_idx, kl_weight):
    return _kernels.bel_grad_batch(alpha, y_idx, float(kl_weight))
