"""Special-function checks: frozen high-precision references, recurrences,
finite-difference consistency, and domain rejection."""

import numpy as np
import pytest
import scipy.special

from belfsc import specfun
from belfsc.specfun import DomainError

# Reference values generated offline with mpmath at 50 decimal digits.
LN_GAMMA_REF = [
    (0.001, 6.9071788853838536825),
    (0.01, 4.5994798780420217225),
    (0.1, 2.2527126517342059599),
    (0.35, 0.93458122714623255657),
    (0.5, 0.57236494292470008707),
    (0.75, 0.20328095143129537148),
    (0.9999997, 1.7316477349250368487e-7),
    (1.0, 0.0),
    (1.0000004, -2.3088613436591344026e-7),
    (1.2, -0.08537409000331584972),
    (1.4616, -0.12148629003589732842),
    (1.5, -0.12078223763524522235),
    (1.75, -0.084401121020485555958),
    (1.9999996, -1.6911368244465719735e-7),
    (2.0, 0.0),
    (2.0000003, 1.2683532955157133148e-7),
    (2.2, 0.096947466790638776492),
    (2.5, 0.28468287047291915963),
    (2.7, 0.4348205536551045317),
    (3.0, 0.69314718055994530942),
    (4.5, 2.4537365708424422205),
    (5.0, 3.1780538303479456196),
    (8.3, 9.1357668711765944779),
    (10.0, 12.801827480081469611),
    (17.29, 31.487411889842880504),
    (100.0, 359.13420536957539878),
    (1234.5, 7550.5509010778948957),
    (1e4, 82099.717496442377273),
    (123456.0, 1323892.7688437014141),
    (1e6, 12815504.56914761166),
]

DIGAMMA_REF = [
    (0.001, -1000.5755719318103005),
    (0.1, -10.423754940411076795),
    (0.5, -1.9635100260214234794),
    (1.0, -0.57721566490153286061),
    (1.4616, -0.000031106251230351619752),
    (2.0, 0.42278433509846713939),
    (2.5, 0.70315664064524318723),
    (5.0, 1.5061176684318004727),
    (10.0, 2.2517525890667211076),
    (100.0, 4.6001618527380874002),
    (1e4, 9.2102903711428494036),
    (1e6, 13.815510057964190771),
]

TRIGAMMA_REF = [
    (0.001, 1000001.642533195869),
    (0.1, 101.43329915079275882),
    (0.5, 4.9348022005446793094),
    (1.0, 1.6449340668482264365),
    (2.0, 0.64493406684822643647),
    (2.5, 0.49035775610023486497),
    (5.0, 0.22132295573711532536),
    (10.0, 0.10516633568168574612),
    (100.0, 0.010050166663333571395),
    (1e4, 0.00010000500016666666633),
    (1e6, 1.0000005000001666667e-6),
]


class TestReferenceValues:
    @pytest.mark.parametrize("x,expected", LN_GAMMA_REF)
    def test_ln_gamma(self, x, expected):
        got = specfun.ln_gamma(x)
        # relative where the value has magnitude, absolute through the zeros
        assert got == pytest.approx(expected, rel=1e-12, abs=1e-14)

    @pytest.mark.parametrize("x,expected", DIGAMMA_REF)
    def test_digamma(self, x, expected):
        assert specfun.digamma(x) == pytest.approx(expected, rel=1e-12, abs=1e-13)

    @pytest.mark.parametrize("x,expected", TRIGAMMA_REF)
    def test_trigamma(self, x, expected):
        assert specfun.trigamma(x) == pytest.approx(expected, rel=1e-12)

    def test_known_constants(self):
        assert specfun.ln_gamma(1.0) == 0.0
        assert specfun.ln_gamma(5.0) == pytest.approx(np.log(24.0), rel=1e-14)
        assert specfun.ln_gamma(0.5) == pytest.approx(0.5 * np.log(np.pi), rel=1e-14)
        assert specfun.digamma(1.0) == pytest.approx(-0.5772156649015329, abs=1e-14)
        assert specfun.digamma(2.0) == pytest.approx(1.0 - 0.5772156649015329, abs=1e-14)
        assert specfun.trigamma(1.0) == pytest.approx(np.pi**2 / 6.0, rel=1e-14)
        assert specfun.trigamma(2.0) == pytest.approx(np.pi**2 / 6.0 - 1.0, rel=1e-14)

    def test_digamma_recurrence_telescopes(self):
        # psi(4) - psi(2) = 1/2 + 1/3
        assert specfun.digamma(4.0) - specfun.digamma(2.0) == pytest.approx(
            5.0 / 6.0, rel=1e-13
        )

    def test_trigamma_asymptotic_tail(self):
        assert specfun.trigamma(100.0) == pytest.approx(0.01, rel=0.01)


class TestRecurrences:
    """psi(x+1) = psi(x) + 1/x and psi'(x+1) = psi'(x) - 1/x^2 on random draws."""

    def test_digamma_recurrence(self):
        rng = np.random.default_rng(7)
        x = rng.uniform(1e-6, 1e3, size=10_000)
        lhs = np.array([specfun.digamma(v + 1.0) for v in x])
        rhs = np.array([specfun.digamma(v) for v in x]) + 1.0 / x
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_trigamma_recurrence(self):
        rng = np.random.default_rng(8)
        x = rng.uniform(1e-6, 1e3, size=10_000)
        lhs = np.array([specfun.trigamma(v + 1.0) for v in x])
        rhs = np.array([specfun.trigamma(v) for v in x]) - 1.0 / (x * x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)

    def test_ln_gamma_recurrence(self):
        rng = np.random.default_rng(9)
        x = rng.uniform(1e-3, 1e3, size=10_000)
        lhs = np.array([specfun.ln_gamma(v + 1.0) for v in x])
        rhs = np.array([specfun.ln_gamma(v) for v in x]) + np.log(x)
        np.testing.assert_allclose(lhs, rhs, rtol=1e-10, atol=1e-12)


class TestDerivativeConsistency:
    """Each function is the derivative of the previous one (central differences)."""

    def test_digamma_is_ln_gamma_derivative(self):
        for x in np.geomspace(0.1, 100.0, 60):
            h = 1e-6 * max(x, 1.0)
            fd = (specfun.ln_gamma(x + h) - specfun.ln_gamma(x - h)) / (2 * h)
            assert fd == pytest.approx(specfun.digamma(x), rel=1e-6, abs=1e-8)

    def test_trigamma_is_digamma_derivative(self):
        for x in np.geomspace(0.1, 100.0, 60):
            h = 1e-6 * max(x, 1.0)
            fd = (specfun.digamma(x + h) - specfun.digamma(x - h)) / (2 * h)
            assert fd == pytest.approx(specfun.trigamma(x), rel=1e-6, abs=1e-8)


class TestAgainstScipy:
    """Independent library oracle over a dense grid."""

    def test_dense_grid(self):
        x = np.concatenate(
            [np.geomspace(1e-3, 2.5, 400), np.linspace(2.5, 2e3, 400)]
        )
        mine_lg = np.array([specfun.ln_gamma(v) for v in x])
        mine_dg = np.array([specfun.digamma(v) for v in x])
        mine_tg = np.array([specfun.trigamma(v) for v in x])
        np.testing.assert_allclose(mine_lg, scipy.special.gammaln(x), rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(mine_dg, scipy.special.psi(x), rtol=1e-12, atol=1e-13)
        np.testing.assert_allclose(mine_tg, scipy.special.polygamma(1, x), rtol=1e-12)


class TestDomain:
    @pytest.mark.parametrize("fn", [specfun.ln_gamma, specfun.digamma, specfun.trigamma])
    @pytest.mark.parametrize("bad", [0.0, -1.0, -0.5, float("nan"), float("inf")])
    def test_rejects_nonpositive_and_nonfinite(self, fn, bad):
        with pytest.raises(DomainError):
            fn(bad)

    def test_domain_error_is_value_error(self):
        assert issubclass(DomainError, ValueError)
