"""Normal CDF primitives, the QMC rectangle engine, and the quadrature oracle."""

import math

import numpy as np
import pytest

import oracles
from gcilab.errors import (
    BudgetTooSmall,
    DimensionTooLarge,
    InvalidBounds,
    OutOfRange,
)
from gcilab.gaussmodel import ThresholdVector, from_covariance, random_correlation
from gcilab.mvnprob import (
    inv_std_normal_cdf,
    oracle_rect_prob,
    oracle_region_prob,
    rect_prob,
    std_normal_cdf,
    symmetric_rect_prob,
)


class TestStdNormalCdf:
    def test_symmetry_at_zero(self):
        assert std_normal_cdf(0.0) == 0.5

    def test_exact_at_infinity(self):
        assert std_normal_cdf(math.inf) == 1.0
        assert std_normal_cdf(-math.inf) == 0.0

    def test_against_quadrature(self):
        for x in [-6.0, -2.5, -1.0, -0.3, 0.7, 1.0, 2.0, 4.5]:
            assert abs(std_normal_cdf(x) - oracles.phi_quad(x)) <= 1e-12
        assert abs(std_normal_cdf(1.0) - 0.8413447) < 1e-6

    def test_deep_tail_clamped(self):
        assert std_normal_cdf(-45.0) >= 1e-300

    def test_nan_rejected(self):
        with pytest.raises(OutOfRange):
            std_normal_cdf(float("nan"))


class TestInvStdNormalCdf:
    def test_median(self):
        assert inv_std_normal_cdf(0.5) == 0.0

    def test_against_bisection_oracle(self):
        for p in [0.975, 0.6, 0.1, 0.9974420]:
            assert abs(inv_std_normal_cdf(p) - oracles.phi_inv_quad(p)) < 1e-9
        assert abs(inv_std_normal_cdf(0.975) - 1.959964) < 1e-5

    def test_roundtrip(self):
        for p in [1e-8, 0.2, 0.5, 0.77, 1 - 1e-8]:
            assert abs(std_normal_cdf(inv_std_normal_cdf(p)) - p) <= 1e-10

    def test_antisymmetry(self):
        for p in [0.01, 0.3, 0.499]:
            assert abs(inv_std_normal_cdf(p) + inv_std_normal_cdf(1 - p)) <= 1e-10

    def test_out_of_range(self):
        for p in [0.0, 1.0, -0.1, 1.1]:
            with pytest.raises(OutOfRange):
                inv_std_normal_cdf(p)


class TestRectProb:
    def test_identity_product(self):
        m = from_covariance(np.eye(2))
        est = rect_prob(m, [-1, -1], [1, 1], budget=2 ** 12, seed=1)
        expect = oracles.sym_prob_quad(1.0) ** 2
        assert abs(est.value - expect) <= max(3 * est.stderr, 1e-10)
        assert abs(expect - 0.4660649) < 1e-6

    def test_rank_one_collapse(self):
        m = from_covariance([[1, 1], [1, 1]])
        est = rect_prob(m, [-1, -1], [1, 1], budget=2 ** 12, seed=2)
        expect = oracles.sym_prob_quad(1.0)
        assert abs(est.value - expect) <= max(3 * est.stderr, 1e-9)
        assert abs(expect - 0.6826895) < 1e-6

    def test_correlated_exceeds_independent(self):
        m = from_covariance([[1, 0.5], [0.5, 1]])
        est = rect_prob(m, [-1, -1], [1, 1], budget=2 ** 14, seed=3)
        expect = oracles.bivariate_rect_quad(0.5, [-1, -1], [1, 1])
        assert abs(est.value - expect) <= 3 * est.stderr + 1e-7
        assert est.value > 0.4660649

    def test_infinite_bounds_exact(self):
        m = random_correlation(3, 2, 4)
        est = rect_prob(m, [-np.inf] * 3, [np.inf] * 3, budget=2 ** 10, seed=0)
        assert est.value == 1.0

    def test_one_sided_infinite(self):
        m = from_covariance(np.eye(1))
        est = rect_prob(m, [-np.inf], [1.0], budget=2 ** 10, seed=0)
        assert abs(est.value - oracles.phi_quad(1.0)) < 1e-12

    def test_invalid_bounds(self):
        m = from_covariance(np.eye(2))
        with pytest.raises(InvalidBounds):
            rect_prob(m, [1, 0], [0, 1], budget=2 ** 10, seed=0)

    def test_budget_too_small(self):
        m = from_covariance(np.eye(2))
        with pytest.raises(BudgetTooSmall):
            rect_prob(m, [-1, -1], [1, 1], budget=999, seed=0)

    def test_reproducible(self):
        m = random_correlation(4, 3, 5)
        a = rect_prob(m, [-1, -2, -1, -0.5], [1, 2, 1, 0.5], budget=2 ** 12, seed=11)
        b = rect_prob(m, [-1, -2, -1, -0.5], [1, 2, 1, 0.5], budget=2 ** 12, seed=11)
        assert a.value == b.value and a.stderr == b.stderr

    def test_monotone_under_interval_enlargement(self):
        for seed in range(8):
            m = random_correlation(4, 3, seed)
            lo = np.full(4, -1.0)
            hi = np.array([1.0, 0.8, 1.2, 0.6])
            base = rect_prob(m, lo, hi, budget=2 ** 12, seed=seed)
            wide = rect_prob(m, lo - 0.5, hi + 0.7, budget=2 ** 12, seed=seed + 100)
            slack = 3 * math.hypot(base.stderr, wide.stderr)
            assert wide.value >= base.value - slack

    def test_sign_symmetry(self):
        for seed in range(6):
            m = random_correlation(3, 2, seed)
            lo = np.array([-0.5, -1.5, -1.0])
            hi = np.array([1.0, 0.7, 1.3])
            rows = m.factor_rows.copy()
            rows[1] = -rows[1]
            sigma = rows @ rows.T
            flipped = from_covariance(0.5 * (sigma + sigma.T))
            lo2, hi2 = lo.copy(), hi.copy()
            lo2[1], hi2[1] = -hi[1], -lo[1]
            a = rect_prob(m, lo, hi, budget=2 ** 12, seed=seed)
            b = rect_prob(flipped, lo2, hi2, budget=2 ** 12, seed=seed + 50)
            assert abs(a.value - b.value) <= 3 * math.hypot(a.stderr, b.stderr) + 1e-6

    def test_block_factorization(self):
        m1 = random_correlation(2, 2, 1)
        m2 = random_correlation(3, 2, 2)
        sigma = np.zeros((5, 5))
        sigma[:2, :2] = m1.sigma
        sigma[2:, 2:] = m2.sigma
        m = from_covariance(sigma)
        c = np.array([1.0, 0.8, 1.2, 0.9, 1.1])
        whole = rect_prob(m, -c, c, budget=2 ** 13, seed=3)
        p1 = rect_prob(m1, -c[:2], c[:2], budget=2 ** 13, seed=4)
        p2 = rect_prob(m2, -c[2:], c[2:], budget=2 ** 13, seed=5)
        prod = p1.value * p2.value
        se = math.hypot(whole.stderr, p1.stderr + p2.stderr)
        assert abs(whole.value - prod) <= 3 * se + 1e-6

    def test_stderr_small_at_full_budget(self):
        rng = np.random.default_rng(44)
        for seed in range(5):
            n = int(rng.integers(2, 9))
            d = int(rng.integers(1, n + 1))
            m = random_correlation(n, d, 1_300 + seed)
            c = rng.uniform(0.5, 2.0, size=n)
            est = rect_prob(m, -c, c, budget=2 ** 16, seed=seed, replicates=12)
            assert est.stderr <= 1e-4


class TestSymmetricRectProb:
    def test_all_infinite_is_one(self):
        m = from_covariance(np.eye(3))
        est = symmetric_rect_prob(m, ThresholdVector([np.inf] * 3), budget=2 ** 10, seed=0)
        assert est.value == 1.0

    def test_identity_pair(self):
        m = from_covariance(np.eye(2))
        est = symmetric_rect_prob(m, ThresholdVector([1.0, 1.0]), budget=2 ** 12, seed=1)
        assert abs(est.value - oracles.sym_prob_quad(1.0) ** 2) <= 1e-9

    def test_vanishing_threshold_limit(self):
        m = random_correlation(3, 2, 9)
        est = symmetric_rect_prob(m, ThresholdVector([1e-5, 1.0, 1.0]),
                                  budget=2 ** 12, seed=2)
        assert est.value < 1e-4


class TestOracle:
    def test_one_dimensional_values(self):
        m = from_covariance(np.eye(1))
        est = oracle_rect_prob(m, [-3.0], [3.0])
        assert abs(est.value - oracles.sym_prob_quad(3.0)) <= 1e-7
        assert abs(est.value - 0.9973002) < 1e-6

    def test_rotated_diamond_interval(self):
        # Half-width (N + 1/N)/sqrt(2) at N = 3.
        half = (3 + 1 / 3) / math.sqrt(2)
        m = from_covariance(np.eye(1))
        est = oracle_rect_prob(m, [-half], [half])
        assert abs(est.value - oracles.sym_prob_quad(half)) <= 1e-7
        assert abs(est.value - 0.9813) < 1e-3

    def test_product_factorization(self):
        m = from_covariance(np.eye(2))
        est = oracle_rect_prob(m, [-1, -1], [1, 1])
        assert abs(est.value - oracles.sym_prob_quad(1.0) ** 2) <= 1e-7

    def test_method_tag_and_stderr(self):
        m = from_covariance(np.eye(1))
        est = oracle_rect_prob(m, [-1], [1])
        assert est.method == "quadrature-oracle"
        assert est.stderr == 1e-7

    def test_dimension_cap(self):
        m = random_correlation(4, 4, 0)
        with pytest.raises(DimensionTooLarge):
            oracle_rect_prob(m, np.full(4, -1.0), np.full(4, 1.0))

    def test_bivariate_against_conditioning_quadrature(self):
        for rho in [-0.7, 0.0, 0.3, 0.9]:
            m = from_covariance([[1, rho], [rho, 1]])
            est = oracle_rect_prob(m, [-1.0, -0.5], [0.8, 1.5])
            expect = oracles.bivariate_rect_quad(rho, [-1.0, -0.5], [0.8, 1.5])
            assert abs(est.value - expect) <= 2e-7

    def test_three_dimensional_product(self):
        m = from_covariance(np.eye(3))
        est = oracle_rect_prob(m, [-1, -0.5, -2], [1, 0.5, 2])
        expect = (oracles.sym_prob_quad(1.0) * oracles.sym_prob_quad(0.5)
                  * oracles.sym_prob_quad(2.0))
        assert abs(est.value - expect) <= 1e-7

    def test_region_prob_handles_degenerate_rows(self):
        rows = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
        val = oracle_region_prob(rows, np.array([-1.0, -2.0, -1.0]),
                                 np.array([1.0, 2.0, 1.0]))
        expect = oracles.sym_prob_quad(1.0) ** 2
        assert abs(val - expect) <= 1e-7


class TestQmcOracleAgreement:
    def test_sweep(self):
        rng = np.random.default_rng(0)
        for seed in range(10):
            n = int(rng.integers(1, 6))
            d = int(rng.integers(1, min(n, 3) + 1))
            m = random_correlation(n, d, seed)
            c = rng.uniform(0.4, 2.0, size=n)
            qmc_est = rect_prob(m, -c, c, budget=2 ** 13, seed=seed)
            oracle_est = oracle_rect_prob(m, -c, c)
            tol = 3 * qmc_est.stderr + 3 * oracle_est.stderr
            assert abs(qmc_est.value - oracle_est.value) <= tol
