"""Evidence / Dirichlet / opinion conversions and the density definition."""

import numpy as np
import pytest
from conftest import simplex_centroid_grid

from belfsc.evidence import (
    DirichletParams,
    Evidence,
    Opinion,
    dirichlet_log_density,
    dirichlet_log_density_batch,
    evidence_to_params,
    expected_probability,
    params_to_opinion,
)

LN2 = 0.6931471805599453
LN3 = 1.0986122886681098


class TestEvidenceToParams:
    def test_zero_evidence_identity(self):
        p = evidence_to_params(Evidence([0.0, 0.0, 0.0]))
        np.testing.assert_array_equal(p.alpha, [1.0, 1.0, 1.0])
        assert p.strength == 3.0

    def test_unit_evidence(self):
        p = evidence_to_params(Evidence([1.0, 1.0, 1.0]))
        np.testing.assert_array_equal(p.alpha, [2.0, 2.0, 2.0])
        assert p.strength == 6.0

    def test_concentrated_evidence(self):
        p = evidence_to_params(Evidence([9.0, 0.0, 0.0]))
        np.testing.assert_array_equal(p.alpha, [10.0, 1.0, 1.0])
        assert p.strength == 12.0

    def test_rejects_negative(self):
        with pytest.raises(ValueError):
            Evidence([1.0, -0.1, 0.0])

    def test_rejects_nonfinite(self):
        with pytest.raises(ValueError):
            Evidence([1.0, np.inf, 0.0])
        with pytest.raises(ValueError):
            Evidence([np.nan, 0.0])

    def test_rejects_single_class(self):
        with pytest.raises(ValueError):
            Evidence([1.0])


class TestParamsToOpinion:
    def test_total_ignorance(self):
        o = params_to_opinion(DirichletParams([1.0, 1.0, 1.0]))
        np.testing.assert_array_equal(o.belief, [0.0, 0.0, 0.0])
        assert o.uncertainty == 1.0

    def test_even_evidence(self):
        o = params_to_opinion(DirichletParams([2.0, 2.0, 2.0]))
        np.testing.assert_allclose(o.belief, [1 / 6, 1 / 6, 1 / 6])
        assert o.uncertainty == pytest.approx(0.5)

    def test_concentrated(self):
        o = params_to_opinion(DirichletParams([10.0, 1.0, 1.0]))
        np.testing.assert_allclose(o.belief, [9 / 12, 0.0, 0.0])
        assert o.uncertainty == pytest.approx(3 / 12)

    def test_opinion_invariant_enforced(self):
        with pytest.raises(ValueError):
            Opinion(belief=np.array([0.5, 0.5]), uncertainty=0.5)


class TestExpectedProbability:
    @pytest.mark.parametrize(
        "alpha,expected",
        [
            ([1, 1, 1], [1 / 3, 1 / 3, 1 / 3]),
            ([10, 1, 1], [10 / 12, 1 / 12, 1 / 12]),
            ([2, 1, 1], [0.5, 0.25, 0.25]),
        ],
    )
    def test_direct(self, alpha, expected):
        p = expected_probability(DirichletParams(alpha))
        np.testing.assert_allclose(p, expected)
        assert p.sum() == pytest.approx(1.0, abs=1e-9)


class TestLogDensity:
    def test_uniform_density_is_gamma_k(self):
        p = DirichletParams([1.0, 1.0, 1.0])
        got = dirichlet_log_density(p, [1 / 3, 1 / 3, 1 / 3])
        assert got == pytest.approx(LN2, abs=1e-12)

    def test_hand_value(self):
        # ln Gamma(4) - ln Gamma(2) + ln 0.5 = ln 6 + ln 0.5 = ln 3
        p = DirichletParams([2.0, 1.0, 1.0])
        got = dirichlet_log_density(p, [0.5, 0.25, 0.25])
        assert got == pytest.approx(LN3, abs=1e-12)

    def test_rejects_boundary_and_off_simplex(self):
        p = DirichletParams([2.0, 1.0, 1.0])
        with pytest.raises(ValueError):
            dirichlet_log_density(p, [0.0, 0.5, 0.5])
        with pytest.raises(ValueError):
            dirichlet_log_density(p, [0.4, 0.4, 0.4])
        with pytest.raises(ValueError):
            dirichlet_log_density(p, [0.5, 0.5])

    def test_density_integrates_to_one(self):
        # quadrature oracle on the exact triangular tiling
        points, weight = simplex_centroid_grid(300)
        rng = np.random.default_rng(42)
        for _ in range(5):
            p = DirichletParams(rng.uniform(1.0, 5.0, size=3))
            total = np.exp(dirichlet_log_density_batch(p, points)).sum() * weight
            assert total == pytest.approx(1.0, abs=1e-3)

    def test_batch_matches_scalar(self):
        p = DirichletParams([2.5, 1.5, 3.0])
        points, _ = simplex_centroid_grid(10)
        batch = dirichlet_log_density_batch(p, points[:17])
        single = [dirichlet_log_density(p, x) for x in points[:17]]
        np.testing.assert_allclose(batch, single, rtol=1e-13)


class TestInvariants:
    def test_roundtrip_uncertainty(self):
        rng = np.random.default_rng(0)
        for _ in range(200):
            k = int(rng.integers(2, 8))
            e = rng.uniform(0.0, 20.0, size=k)
            o = params_to_opinion(evidence_to_params(Evidence(e)))
            assert o.uncertainty == pytest.approx(k / (e.sum() + k), rel=1e-12)

    def test_more_evidence_means_less_uncertainty(self):
        rng = np.random.default_rng(1)
        for _ in range(100):
            e = rng.uniform(0.0, 10.0, size=4)
            o1 = params_to_opinion(evidence_to_params(Evidence(e)))
            idx = int(rng.integers(0, 4))
            bumped = e.copy()
            bumped[idx] += rng.uniform(0.1, 5.0)
            o2 = params_to_opinion(evidence_to_params(Evidence(bumped)))
            assert o2.uncertainty < o1.uncertainty

    def test_probability_dominates_belief(self):
        # alpha_k/S == b_k + u/K
        rng = np.random.default_rng(2)
        for _ in range(100):
            k = int(rng.integers(2, 6))
            p = evidence_to_params(Evidence(rng.uniform(0.0, 30.0, size=k)))
            o = params_to_opinion(p)
            np.testing.assert_allclose(
                expected_probability(p), o.belief + o.uncertainty / k, rtol=1e-12
            )

    def test_params_are_immutable(self):
        p = DirichletParams([2.0, 3.0, 4.0])
        with pytest.raises(ValueError):
            p.alpha[0] = 5.0

    def test_rejects_alpha_below_one(self):
        with pytest.raises(ValueError):
            DirichletParams([0.5, 1.0, 1.0])
