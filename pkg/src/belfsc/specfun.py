"""Scalar special functions on the positive reals: ln Gamma, digamma, trigamma.

Thin validating wrappers over the active kernel backend.  Arguments must be
strictly positive and finite; there is no reflection to the negative axis
because every caller in this package works with Dirichlet concentrations
alpha_k >= 1.
"""

import math

from belfsc import _kernels


class DomainError(ValueError):
    """Argument outside a function's domain."""


def _check_positive(x, name):
    x = float(x)
    if not math.isfinite(x) or x <= 0.0:
        raise DomainError(f"{name} requires a finite argument > 0, got {x!r}")
    return x


def ln_gamma(x):
    """Natural log of the Gamma function, relative error <= 1e-12 on [1e-3, 1e6]."""
    return _kernels.ln_gamma(_check_positive(x, "ln_gamma"))


def digamma(x):
    """Logarithmic derivative of Gamma."""
    return _kernels.digamma(_check_positive(x, "digamma"))


def trigamma(x):
    """Derivative of digamma."""
    return _kernels.trigamma(_check_positive(x, "trigamma"))
