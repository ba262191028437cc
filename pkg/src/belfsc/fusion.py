"""Bayesian fusion of prior (pre-trained) and observed (meta-trained) evidence.

The canonical rule fuses at the evidence level,

    e_k = prior_weight * e^P_k + e^M_k,    alpha_k = e_k + 1,

which matches the count semantics of the Dirichlet posterior
Dir(beta + gamma): weighted prior pseudo-counts plus observed
pseudo-counts.  An alternative that fuses the concentrations directly
(alpha = prior_weight * alpha^P + alpha^M, shifting the result by
prior_weight) is available behind ``alpha_level`` for ablations.
"""

from dataclasses import dataclass

import numpy as np

from belfsc.evidence import DirichletParams, Evidence


@dataclass(frozen=True)
class FusionConfig:
    prior_weight: float = 0.4  # eta: 0 disables the prior entirely
    alpha_level: bool = False

    def __post_init__(self):
        if not np.isfinite(self.prior_weight) or self.prior_weight < 0.0:
            raise ValueError("prior_weight must be finite and >= 0")


def fuse_evidence(prior: Evidence, observed: Evidence, cfg: FusionConfig) -> Evidence:
    """Weighted additive fusion of two evidence vectors of equal width."""
    if prior.num_classes != observed.num_classes:
        raise ValueError(
            f"dimension mismatch: prior has {prior.num_classes} classes, "
            f"observed has {observed.num_classes}"
        )
    fused = cfg.prior_weight * prior.values + observed.values
    if cfg.alpha_level:
        # eta*(e^P+1) + (e^M+1) - 1 == canonical + eta
        fused = fused + cfg.prior_weight
    return Evidence(fused)


def posterior_params(prior_dir: DirichletParams, counts) -> DirichletParams:
    """Dirichlet posterior Dir(beta + gamma) for observation counts gamma >= 0.

    Counts may be real-valued: network-produced evidence is continuous and
    the conjugate update holds for any non-negative exponents.
    """
    counts = np.asarray(counts, dtype=np.float64)
    if counts.shape != prior_dir.alpha.shape:
        raise ValueError(
            f"dimension mismatch: prior has {prior_dir.num_classes} classes, "
            f"counts have shape {counts.shape}"
        )
    if not np.all(np.isfinite(counts)) or np.any(counts < 0.0):
        raise ValueError("counts must be finite and non-negative")
    return DirichletParams(prior_dir.alpha + counts)
