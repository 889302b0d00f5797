import math

import numpy as np
import pytest
import scipy.stats

from pplr.exceptions import ContractViolation, SolverError
from pplr.families import Dataset, Family
from pplr.inference import (
    HypothesisSpec,
    chi2_cdf,
    chi2_quantile,
    fisher_blocks,
    linear_transform,
    noncentral_chi2_cdf,
    noncentral_param,
    olr_test,
    plr_test,
    pplr_test,
)
from pplr.penalties import PenaltySpec

from conftest import make_linear, make_logistic
from oracles import gaussian_lr_closed_form, standardized_design


class TestChi2:
    def test_standard_quantile(self):
        assert chi2_cdf(3.841459, 1) == pytest.approx(0.95, abs=1e-6)

    def test_zero(self):
        for k in (1, 2, 7):
            assert chi2_cdf(0.0, k) == 0.0

    def test_exponential_special_case(self):
        for x in (1.0, 2.0, 5.0):
            assert chi2_cdf(x, 2) == pytest.approx(1 - math.exp(-x / 2),
                                                   abs=1e-12)

    def test_quantile_inverts_cdf(self):
        for q, k in [(0.95, 1), (0.5, 3), (0.99, 10), (0.025, 2)]:
            x = chi2_quantile(q, k)
            assert chi2_cdf(x, k) == pytest.approx(q, abs=1e-10)
            assert x == pytest.approx(scipy.stats.chi2.ppf(q, k), abs=1e-7)

    def test_strictly_increasing(self):
        xs = np.linspace(0.01, 20, 50)
        vals = [chi2_cdf(x, 3) for x in xs]
        assert all(b > a for a, b in zip(vals, vals[1:]))

    def test_rejects_negative(self):
        with pytest.raises(ContractViolation):
            chi2_cdf(-1.0, 2)


class TestNoncentralChi2:
    def test_gamma_zero_is_central(self):
        for x, k in [(0.5, 1), (3.2, 2), (11.0, 6)]:
            assert noncentral_chi2_cdf(x, k, 0.0) == chi2_cdf(x, k)

    def test_matches_scipy(self):
        for x, k, g in [(3.84, 1, 4.0), (5.0, 2, 9.0), (1.0, 1, 0.3),
                        (25.0, 5, 16.0), (10.0, 1, 30.0)]:
            assert noncentral_chi2_cdf(x, k, g) == pytest.approx(
                scipy.stats.ncx2.cdf(x, k, g), abs=1e-10)

    def test_theoretical_power_values(self):
        q95 = chi2_quantile(0.95, 1)
        assert 1 - noncentral_chi2_cdf(q95, 1, 4.0) == pytest.approx(
            0.5160, abs=2e-4)
        assert 1 - noncentral_chi2_cdf(q95, 1, 9.0) == pytest.approx(
            0.8508, abs=2e-4)

    def test_nonincreasing_in_gamma(self):
        vals = [noncentral_chi2_cdf(3.0, 2, g) for g in (0, 1, 2, 5, 10, 20)]
        assert all(b <= a + 1e-14 for a, b in zip(vals, vals[1:]))


class TestLinearTransform:
    def test_round_trip_orthogonality(self, rng):
        for p, d in [(5, 1), (8, 3), (12, 2)]:
            M = rng.standard_normal((d, p))
            A = np.linalg.qr(M.T)[0][:, :d].T
            rep = linear_transform(A)
            np.testing.assert_allclose(rep.A_tilde @ rep.A_tilde.T, np.eye(p),
                                       atol=1e-10)
            np.testing.assert_allclose(rep.A_tilde[:d], A, atol=1e-12)

    def test_reconstruction(self, rng):
        A = np.array([[1.0, 1.0, 0.0]]) / math.sqrt(2)
        rep = linear_transform(A)
        beta = rng.standard_normal(3)
        beta_t = rep.A_tilde @ beta
        np.testing.assert_allclose(rep.inverse @ beta_t, beta, atol=1e-12)

    def test_axis_aligned_reduces_to_zero_subset(self, rng):
        data, _ = make_linear(rng, n=90, p=6)
        A = np.zeros((1, 6))
        A[0, 0] = 1.0
        direct = pplr_test(data, [0], lam=0.2)
        via_linear = pplr_test(data, HypothesisSpec.linear(A), lam=0.2)
        assert via_linear.statistic == pytest.approx(direct.statistic,
                                                     abs=1e-8)

    def test_rank_deficient_rejected(self):
        A = np.array([[1.0, 0.0, 0.0], [1.0, 0.0, 0.0]])
        with pytest.raises(ContractViolation):
            linear_transform(A)

    def test_requires_orthonormal_rows(self):
        with pytest.raises(ContractViolation):
            HypothesisSpec.linear(np.array([[1.0, 1.0, 0.0]]))


class TestOlr:
    def test_gaussian_matches_closed_form(self, rng):
        for _ in range(10):
            data, _ = make_linear(rng, n=70, p=8)
            rep = olr_test(data, [0, 3])
            assert rep.statistic == pytest.approx(
                gaussian_lr_closed_form(data.X, data.y, [0, 3]), abs=1e-6)
            assert rep.df == 2

    def test_needs_more_rows_than_columns(self, rng):
        X = standardized_design(rng, 6, 6)
        data = Dataset(X, rng.standard_normal(6))
        with pytest.raises(ContractViolation):
            olr_test(data, [0])

    def test_p_value_consistent(self, rng):
        data, _ = make_linear(rng, n=70, p=8)
        rep = olr_test(data, [0])
        assert rep.p_value == pytest.approx(1 - chi2_cdf(rep.statistic, 1),
                                            abs=1e-12)

    def test_logistic_runs(self, rng):
        data, _ = make_logistic(rng, n=300, p=6)
        rep = olr_test(data, [0])
        assert rep.statistic >= 0 and 0 <= rep.p_value <= 1

    def test_logistic_separation_raises(self):
        # y perfectly determined by the sign of x1
        X = standardized_design(np.random.default_rng(5), 40, 2)
        y = (X[:, 0] > 0).astype(float)
        data = Dataset(X, y, Family.LOGISTIC)
        with pytest.raises(SolverError):
            olr_test(data, [1])


class TestPenalizedTests:
    def test_lambda_zero_equals_olr(self, rng):
        for maker in (make_linear, make_logistic):
            data, _ = maker(rng, n=120, p=7)
            t_pplr = pplr_test(data, [0], lam=0.0)
            t_olr = olr_test(data, [0])
            assert t_pplr.statistic == pytest.approx(t_olr.statistic, abs=1e-6)

    def test_statistic_nonnegative(self, rng):
        for _ in range(10):
            data, _ = make_linear(rng, n=80, p=9)
            assert pplr_test(data, [0]).statistic >= 0.0
            assert plr_test(data, [0]).statistic >= 0.0

    def test_same_lambda_protocol(self, rng):
        data, _ = make_linear(rng, n=100, p=9)
        rep = pplr_test(data, [0])
        assert rep.full_fit.lam == rep.null_fit.lam == rep.lambda_used

    def test_null_fit_respects_constraint(self, rng):
        data, _ = make_linear(rng, n=100, p=9)
        rep = pplr_test(data, [0, 2])
        assert rep.null_fit.beta[0] == 0.0 and rep.null_fit.beta[2] == 0.0
        assert rep.df == 2

    def test_plr_degenerate_statistic_gives_p_one(self, rng):
        data, _ = make_linear(rng, n=100, p=9, delta=0.0)
        rep = plr_test(data, [0], lam=0.5)
        assert rep.full_fit.beta[0] == 0.0
        assert rep.statistic == pytest.approx(0.0, abs=1e-10)
        assert rep.p_value == 1.0

    def test_cannot_test_everything(self, rng):
        data, _ = make_linear(rng, n=50, p=5)
        with pytest.raises(ContractViolation):
            pplr_test(data, [0, 1, 2, 3, 4])

    def test_unpenalized_superset_allowed(self, rng):
        data, _ = make_linear(rng, n=80, p=7)
        rep = pplr_test(data, [0], unpenalized=[0, 1], lam=0.2)
        assert rep.df == 1
        with pytest.raises(ContractViolation):
            pplr_test(data, [0], unpenalized=[1], lam=0.2)

    def test_p_values_monotone_in_statistic(self, rng):
        reports = []
        for delta in (0.0, 2.0, 6.0):
            data, _ = make_linear(rng, n=100, p=7, delta=delta)
            reports.append(pplr_test(data, [0]))
        ordered = sorted(reports, key=lambda r: r.statistic)
        pvals = [r.p_value for r in ordered]
        assert all(b <= a + 1e-12 for a, b in zip(pvals, pvals[1:]))


class TestNoncentralParam:
    def test_zero_delta(self, rng):
        data, beta0 = make_linear(rng, n=200, p=8)
        assert noncentral_param(data, beta0, [0, 1, 2], [0],
                                np.zeros(1)) == 0.0

    def test_no_nuisance_uses_plain_block(self, rng):
        data, beta0 = make_linear(rng, n=200, p=8)
        from pplr.families import fisher_information
        info = fisher_information(data, beta0, [0])
        expected = float(2.0 * info[0, 0] * 2.0)
        got = noncentral_param(data, beta0, [0], [0], np.array([2.0]))
        assert got == pytest.approx(expected, rel=1e-12)

    def test_identity_fisher_gives_delta_squared(self, rng):
        # big-sample empirical Fisher of the standardized normal design
        data, beta0 = make_linear(rng, n=100_000, p=6)
        gamma = noncentral_param(data, beta0, [0, 1, 2, 3, 4], [0],
                                 np.array([3.0]))
        assert gamma == pytest.approx(9.0, rel=0.03)

    def test_blocks_schur_complement(self, rng):
        info = np.array([[2.0, 0.3, 0.1],
                         [0.3, 1.5, 0.2],
                         [0.1, 0.2, 1.1]])
        blocks = fisher_blocks(info, 1)
        C22 = info[1:, 1:]
        expected = info[:1, :1] - info[:1, 1:] @ np.linalg.solve(C22, info[1:, :1])
        np.testing.assert_allclose(blocks.C11_2, expected, atol=1e-14)

    def test_tested_must_be_active(self, rng):
        data, beta0 = make_linear(rng, n=50, p=6)
        with pytest.raises(ContractViolation):
            noncentral_param(data, beta0, [1, 2], [0], np.array([1.0]))
