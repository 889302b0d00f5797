import math

import numpy as np
import pytest

from pplr.exceptions import ContractViolation
from pplr.families import (
    Dataset,
    Family,
    evaluate,
    fisher_information,
    log_likelihood,
    neg_hessian,
    score,
)

from conftest import make_linear, make_logistic
from oracles import standardized_design


class TestLogLikelihood:
    def test_gaussian_constant_term(self):
        d = Dataset(np.array([[0.0]]), np.array([0.0]))
        assert log_likelihood(d, np.array([0.0])) == pytest.approx(
            -0.5 * math.log(2 * math.pi))

    def test_logistic_even_odds(self):
        d = Dataset(np.array([[0.0]]), np.array([1.0]), Family.LOGISTIC)
        assert log_likelihood(d, np.array([17.3])) == pytest.approx(
            math.log(0.5))

    def test_logistic_two_point(self):
        d = Dataset(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]),
                    Family.LOGISTIC)
        expected = 2.0 * math.log(1.0 / (1.0 + math.exp(-2.0)))
        assert log_likelihood(d, np.array([2.0])) == pytest.approx(
            expected, abs=1e-12)

    def test_logistic_overflow_safe(self):
        d = Dataset(np.array([[1.0], [-1.0]]), np.array([1.0, 0.0]),
                    Family.LOGISTIC)
        val = log_likelihood(d, np.array([800.0]))
        assert np.isfinite(val)
        assert val == pytest.approx(0.0, abs=1e-10)

    def test_logistic_never_positive(self, rng):
        data, _ = make_logistic(rng, n=60)
        for _ in range(20):
            assert log_likelihood(data, rng.normal(size=data.p)) <= 0.0

    def test_row_permutation_invariance(self, rng):
        data, _ = make_linear(rng, n=40, p=6)
        beta = rng.normal(size=6)
        perm = rng.permutation(40)
        permuted = Dataset(data.X[perm], data.y[perm], data.family)
        assert log_likelihood(permuted, beta) == pytest.approx(
            log_likelihood(data, beta), rel=1e-12)

    def test_dimension_mismatch(self, rng):
        data, _ = make_linear(rng, n=20, p=4)
        with pytest.raises(ContractViolation):
            log_likelihood(data, np.zeros(5))


class TestScore:
    def test_zero_at_least_squares(self, rng):
        data, _ = make_linear(rng, n=50, p=7)
        bls, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
        assert np.max(np.abs(score(data, bls))) < 1e-8

    def test_logistic_score_at_zero(self, rng):
        data, _ = make_logistic(rng, n=80)
        expected = data.X.T @ (data.y - 0.5)
        np.testing.assert_allclose(score(data, np.zeros(data.p)), expected,
                                   atol=1e-12)

    @pytest.mark.parametrize("maker", [make_linear, make_logistic])
    def test_matches_finite_differences(self, maker, rng):
        h = 1e-5
        for _ in range(50):
            data, _ = maker(rng, n=30, p=5)
            beta = rng.normal(scale=0.7, size=5)
            g = score(data, beta)
            for j in range(5):
                e = np.zeros(5)
                e[j] = h
                fd = (log_likelihood(data, beta + e)
                      - log_likelihood(data, beta - e)) / (2 * h)
                assert abs(g[j] - fd) <= 1e-5


class TestNegHessian:
    def test_gaussian_is_gram_matrix(self, rng):
        data, _ = make_linear(rng, n=40, p=6)
        np.testing.assert_allclose(neg_hessian(data, rng.normal(size=6)),
                                   data.X.T @ data.X, atol=1e-10)

    @pytest.mark.parametrize("maker", [make_linear, make_logistic])
    def test_matches_score_differences(self, maker, rng):
        h = 1e-6
        data, _ = maker(rng, n=30, p=4)
        beta = rng.normal(scale=0.5, size=4)
        H = neg_hessian(data, beta)
        for j in range(4):
            e = np.zeros(4)
            e[j] = h
            col = (score(data, beta - e) - score(data, beta + e)) / (2 * h)
            np.testing.assert_allclose(H[:, j], col, atol=1e-4)

    def test_symmetry(self, rng):
        data, _ = make_logistic(rng, n=50)
        H = neg_hessian(data, rng.normal(size=data.p))
        assert np.max(np.abs(H - H.T)) <= 1e-12 * max(1.0, np.abs(H).max())

    def test_evaluate_bundle(self, rng):
        data, _ = make_linear(rng, n=25, p=4)
        beta = rng.normal(size=4)
        ev = evaluate(data, beta)
        assert ev.loglik == log_likelihood(data, beta)
        np.testing.assert_array_equal(ev.score, score(data, beta))


class TestFisherInformation:
    def test_standardized_gaussian_diagonal(self, rng):
        X = standardized_design(rng, 60, 5)
        data = Dataset(X, rng.standard_normal(60))
        info = fisher_information(data, np.zeros(5))
        np.testing.assert_allclose(np.diag(info), np.ones(5), atol=1e-12)

    def test_logistic_quarter_gram_at_zero(self, rng):
        data, _ = make_logistic(rng, n=70)
        info = fisher_information(data, np.zeros(data.p))
        np.testing.assert_allclose(info, data.X.T @ data.X / (4 * data.n),
                                   atol=1e-12)

    def test_matches_outer_product_sum(self, rng):
        data, _ = make_logistic(rng, n=40)
        beta = rng.normal(scale=0.4, size=data.p)
        subset = [4, 1, 7]
        info = fisher_information(data, beta, subset)
        acc = np.zeros((3, 3))
        for i in range(data.n):
            x = data.X[i, subset]
            eta = float(data.X[i] @ beta)
            mu = 1.0 / (1.0 + math.exp(-eta))
            acc += mu * (1 - mu) * np.outer(x, x)
        np.testing.assert_allclose(info, acc / data.n, atol=1e-10)

    def test_empty_subset_rejected(self, rng):
        data, _ = make_linear(rng, n=20, p=4)
        with pytest.raises(ContractViolation):
            fisher_information(data, np.zeros(4), [])


class TestDatasetValidation:
    def test_rejects_nonfinite(self):
        with pytest.raises(ContractViolation):
            Dataset(np.array([[np.nan]]), np.array([0.0]))

    def test_rejects_bad_binary(self):
        with pytest.raises(ContractViolation):
            Dataset(np.array([[1.0]]), np.array([0.5]), Family.LOGISTIC)

    def test_rejects_length_mismatch(self):
        with pytest.raises(ContractViolation):
            Dataset(np.eye(3), np.zeros(2))
