"""Evidence fusion and the Dirichlet posterior update, with quadrature oracles."""

import numpy as np
import pytest
from conftest import simplex_centroid_grid

from belfsc.evidence import (
    DirichletParams,
    Evidence,
    dirichlet_log_density_batch,
    evidence_to_params,
    params_to_opinion,
)
from belfsc.fusion import FusionConfig, fuse_evidence, posterior_params


def grid_normalized(log_values):
    """Normalize exp(log_values) to sum 1 over equal-weight grid points."""
    shifted = np.exp(log_values - log_values.max())
    return shifted / shifted.sum()


class TestFuseEvidence:
    def test_zero_weight_disables_prior(self):
        out = fuse_evidence(
            Evidence([5.0, 5.0, 5.0]), Evidence([1.0, 2.0, 3.0]), FusionConfig(0.0)
        )
        np.testing.assert_array_equal(out.values, [1.0, 2.0, 3.0])

    def test_additive(self):
        out = fuse_evidence(
            Evidence([1.0, 0.0, 0.0]), Evidence([2.0, 1.0, 1.0]), FusionConfig(1.0)
        )
        np.testing.assert_array_equal(out.values, [3.0, 1.0, 1.0])

    def test_scaling(self):
        out = fuse_evidence(
            Evidence([10.0, 0.0, 0.0]), Evidence([0.0, 0.0, 0.0]), FusionConfig(0.4)
        )
        np.testing.assert_allclose(out.values, [4.0, 0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            fuse_evidence(Evidence([1.0, 2.0]), Evidence([1.0, 2.0, 3.0]), FusionConfig())

    def test_negative_weight_rejected(self):
        with pytest.raises(ValueError):
            FusionConfig(prior_weight=-0.1)

    def test_fused_params_formula(self):
        # alpha_k = eta*e^P_k + e^M_k + 1 on the canonical path
        rng = np.random.default_rng(3)
        for _ in range(50):
            ep = rng.uniform(0, 10, size=5)
            em = rng.uniform(0, 10, size=5)
            eta = float(rng.uniform(0, 2))
            fused = fuse_evidence(Evidence(ep), Evidence(em), FusionConfig(eta))
            p = evidence_to_params(fused)
            np.testing.assert_allclose(p.alpha, eta * ep + em + 1.0, rtol=1e-12)

    def test_alpha_level_variant_shifts_by_eta(self):
        ep = np.array([2.0, 0.0, 1.0])
        em = np.array([1.0, 1.0, 0.0])
        eta = 0.5
        canonical = fuse_evidence(Evidence(ep), Evidence(em), FusionConfig(eta))
        variant = fuse_evidence(
            Evidence(ep), Evidence(em), FusionConfig(eta, alpha_level=True)
        )
        np.testing.assert_allclose(variant.values, canonical.values + eta)
        # equivalently: alpha_fused = eta*alpha^P + alpha^M exactly
        alpha_p = ep + 1.0
        alpha_m = em + 1.0
        np.testing.assert_allclose(variant.values + 1.0, eta * alpha_p + alpha_m)

    def test_fusion_reduces_uncertainty(self):
        rng = np.random.default_rng(4)
        for _ in range(50):
            ep = rng.uniform(0.01, 10, size=4)  # at least one positive entry
            em = rng.uniform(0, 10, size=4)
            eta = float(rng.uniform(0.05, 1.5))
            meta_only = params_to_opinion(evidence_to_params(Evidence(em)))
            fused = params_to_opinion(
                evidence_to_params(fuse_evidence(Evidence(ep), Evidence(em), FusionConfig(eta)))
            )
            assert fused.uncertainty < meta_only.uncertainty


class TestPosteriorParams:
    def test_counts_add(self):
        out = posterior_params(DirichletParams([2.0, 1.0, 1.0]), [1.0, 0.0, 0.0])
        np.testing.assert_array_equal(out.alpha, [3.0, 1.0, 1.0])

    def test_no_observations(self):
        out = posterior_params(DirichletParams([1.0, 1.0, 1.0]), [0.0, 0.0, 0.0])
        np.testing.assert_array_equal(out.alpha, [1.0, 1.0, 1.0])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError):
            posterior_params(DirichletParams([2.0, 1.0, 1.0]), [-0.5, 0.0, 0.0])

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            posterior_params(DirichletParams([2.0, 1.0, 1.0]), [1.0, 0.0])

    def test_real_valued_counts_product_density(self):
        # normalized pointwise product of prior density and likelihood
        # prod z_i^gamma_i matches the posterior density on the grid
        points, _ = simplex_centroid_grid(80)
        beta = DirichletParams([2.0, 3.0, 4.0])
        gamma = np.array([1.5, 0.5, 2.0])
        log_product = dirichlet_log_density_batch(beta, points) + np.log(points) @ gamma
        log_posterior = dirichlet_log_density_batch(posterior_params(beta, gamma), points)
        np.testing.assert_allclose(
            grid_normalized(log_product),
            grid_normalized(log_posterior),
            rtol=1e-6,
        )

    def test_bayes_update_theorem_random(self):
        # smaller-scale version of the acceptance oracle
        points, _ = simplex_centroid_grid(60)
        rng = np.random.default_rng(5)
        for _ in range(20):
            beta = DirichletParams(rng.uniform(1.0, 10.0, size=3))
            gamma = rng.uniform(0.0, 10.0, size=3)
            log_product = dirichlet_log_density_batch(beta, points) + np.log(points) @ gamma
            log_posterior = dirichlet_log_density_batch(
                posterior_params(beta, gamma), points
            )
            np.testing.assert_allclose(
                grid_normalized(log_product),
                grid_normalized(log_posterior),
                rtol=1e-6,
            )

    def test_associative_in_observations(self):
        rng = np.random.default_rng(6)
        for _ in range(50):
            beta = DirichletParams(rng.uniform(1.0, 10.0, size=4))
            g1 = rng.uniform(0.0, 5.0, size=4)
            g2 = rng.uniform(0.0, 5.0, size=4)
            seq = posterior_params(posterior_params(beta, g1), g2)
            joint = posterior_params(beta, g1 + g2)
            np.testing.assert_allclose(seq.alpha, joint.alpha, rtol=1e-15)
