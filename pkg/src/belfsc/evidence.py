"""Evidence, Dirichlet parameters, and subjective-logic opinions.

The three views of one belief state and the conversions between them:
per-class evidence e_k >= 0, concentrations alpha_k = e_k + 1 with strength
S = sum(alpha), and the opinion (belief masses b_k = e_k / S, uncertainty
u = K / S) which sums to one.

Values are immutable after construction; the arrays are copied and marked
read-only so opinions can never drift out of sync with their parameters.
"""

from dataclasses import dataclass, field

import numpy as np

from belfsc import specfun


def _frozen_vector(values, name, min_len=2):
    arr = np.array(values, dtype=np.float64, copy=True)
    if arr.ndim != 1 or arr.shape[0] < min_len:
        raise ValueError(f"{name} must be a 1-D vector of length >= {min_len}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{name} must be finite")
    arr.flags.writeable = False
    return arr


@dataclass(frozen=True)
class Evidence:
    """Non-negative per-class evidence for a K-way decision."""

    values: np.ndarray

    def __post_init__(self):
        arr = _frozen_vector(self.values, "evidence")
        if np.any(arr < 0.0):
            raise ValueError("evidence must be non-negative")
        object.__setattr__(self, "values", arr)

    @property
    def num_classes(self):
        return self.values.shape[0]


@dataclass(frozen=True)
class DirichletParams:
    """Concentration vector alpha (every entry >= 1) with cached strength."""

    alpha: np.ndarray
    strength: float = field(init=False)

    def __post_init__(self):
        arr = _frozen_vector(self.alpha, "alpha")
        if np.any(arr < 1.0):
            raise ValueError("concentrations must be >= 1")
        object.__setattr__(self, "alpha", arr)
        object.__setattr__(self, "strength", float(arr.sum()))

    @property
    def num_classes(self):
        return self.alpha.shape[0]


@dataclass(frozen=True)
class Opinion:
    """Belief masses plus overall uncertainty; u + sum(b) == 1."""

    belief: np.ndarray
    uncertainty: float

    def __post_init__(self):
        arr = _frozen_vector(self.belief, "belief")
        if np.any(arr < 0.0):
            raise ValueError("belief masses must be non-negative")
        if not np.isfinite(self.uncertainty) or self.uncertainty < 0.0:
            raise ValueError("uncertainty must be finite and non-negative")
        total = float(arr.sum()) + float(self.uncertainty)
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"belief masses and uncertainty sum to {total}, not 1")
        object.__setattr__(self, "belief", arr)
        object.__setattr__(self, "uncertainty", float(self.uncertainty))


def evidence_to_params(e: Evidence) -> DirichletParams:
    """alpha_k = e_k + 1."""
    return DirichletParams(e.values + 1.0)


def params_to_opinion(p: DirichletParams) -> Opinion:
    """b_k = (alpha_k - 1) / S, u = K / S."""
    return Opinion(
        belief=(p.alpha - 1.0) / p.strength,
        uncertainty=p.num_classes / p.strength,
    )


def expected_probability(p: DirichletParams) -> np.ndarray:
    """Mean of the Dirichlet: alpha_k / S."""
    return p.alpha / p.strength


def _check_simplex_interior(x, k):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != k:
        raise ValueError(f"simplex point has {x.shape[-1]} entries, expected {k}")
    if np.any(x <= 0.0):
        raise ValueError("simplex point must be strictly interior (all entries > 0)")
    total = x.sum(axis=-1)
    if np.any(np.abs(total - 1.0) > 1e-9):
        raise ValueError("simplex point coordinates must sum to 1")
    return x


def dirichlet_log_density(p: DirichletParams, x) -> float:
    """ln Dir(x | alpha) at an interior simplex point."""
    x = _check_simplex_interior(x, p.num_classes)
    if x.ndim != 1:
        raise ValueError("x must be a single simplex point; see dirichlet_log_density_batch")
    log_norm = specfun.ln_gamma(p.strength) - sum(
        specfun.ln_gamma(float(a)) for a in p.alpha
    )
    return float(log_norm + np.dot(p.alpha - 1.0, np.log(x)))


def dirichlet_log_density_batch(p: DirichletParams, xs) -> np.ndarray:
    """ln Dir(x | alpha) over rows of interior simplex points, shape (N, K)."""
    xs = _check_simplex_interior(xs, p.num_classes)
    if xs.ndim != 2:
        raise ValueError("xs must have shape (N, K)")
    log_norm = specfun.ln_gamma(p.strength) - sum(
        specfun.ln_gamma(float(a)) for a in p.alpha
    )
    return log_norm + np.log(xs) @ (p.alpha - 1.0)
