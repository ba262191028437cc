"""Bayesian evidential learning for few-shot classification, desk scale.

Evidence/opinion algebra over Dirichlet distributions, Bayesian fusion of
pre-trained and meta-trained evidence, the evidential Bayes-risk + KL loss
with exact analytic gradients, a small manually-differentiated metric
classifier, episodic training, and calibration-aware evaluation.
"""

from belfsc._kernels import BACKEND as kernel_backend

__version__ = "0.1.0"

__all__ = ["kernel_backend", "__version__"]
