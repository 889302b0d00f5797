"""Likelihood-ratio tests and their chi-square calibration.

Three statistics share the form ``T = 2 (sup_full - sup_null)``:

* ``pplr_test`` -- the tested coordinates are left unpenalized while the
  rest carry the penalty; the null fit re-runs at the *same* tuning
  parameter with the tested coordinates pinned to zero.
* ``plr_test``  -- every coordinate is penalized in both fits (the
  classical fully penalized comparison method).
* ``olr_test``  -- no penalty at all; requires ``n > p``.

Under the null each statistic is referred to a chi-square with ``d``
degrees of freedom; under local alternatives the relevant reference is
the noncentral chi-square with parameter ``gamma = delta' C11.2 delta``
built from the active-set Fisher information.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg
from scipy.optimize import brentq
from scipy.special import expit, gammainc

from . import families, solver
from .exceptions import ContractViolation, SolverError
from .families import Dataset, Family
from .penalties import PenaltySpec
from .solver import FitProblem, FitResult

# Negative statistics larger than this magnitude indicate a solver
# failure rather than round-off and are surfaced, not clamped.
NEGATIVE_STAT_SLACK = 1e-8

# Logistic MLE iterates beyond this sup-norm are treated as divergence
# (complete or quasi-complete separation).
SEPARATION_BOUND = 30.0


# --------------------------------------------------------------------------
# hypotheses
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class HypothesisSpec:
    """Either a zero-subset hypothesis or a general linear one.

    ``indices`` names the coordinates pinned to zero under the null.
    ``A`` is a d x p matrix with orthonormal rows testing ``A b = 0``;
    it is handled by rotating the problem so the hypothesis becomes a
    zero-subset one (see :func:`linear_transform`).
    """

    indices: tuple[int, ...] | None = None
    A: np.ndarray | None = None

    def __post_init__(self):
        if (self.indices is None) == (self.A is None):
            raise ContractViolation("specify exactly one of indices / A")
        if self.indices is not None:
            idx = tuple(int(j) for j in self.indices)
            if len(idx) == 0 or len(set(idx)) != len(idx):
                raise ContractViolation("indices must be nonempty and distinct")
            object.__setattr__(self, "indices", idx)
        else:
            A = np.atleast_2d(np.asarray(self.A, dtype=np.float64))
            d, p = A.shape
            if d >= p:
                raise ContractViolation("linear hypothesis needs d < p")
            if not np.allclose(A @ A.T, np.eye(d), atol=1e-10):
                raise ContractViolation("rows of A must be orthonormal (A A' = I)")
            object.__setattr__(self, "A", A)

    @staticmethod
    def zero_subset(indices) -> "HypothesisSpec":
        return HypothesisSpec(indices=tuple(indices))

    @staticmethod
    def linear(A) -> "HypothesisSpec":
        return HypothesisSpec(A=A)


def _as_hypothesis(h) -> HypothesisSpec:
    if isinstance(h, HypothesisSpec):
        return h
    return HypothesisSpec.zero_subset(h)


@dataclass(frozen=True)
class TestReport:
    method: str
    statistic: float
    df: int
    p_value: float
    lambda_used: float
    full_fit: FitResult
    null_fit: FitResult

    @property
    def converged(self) -> bool:
        return self.full_fit.converged and self.null_fit.converged


@dataclass(frozen=True)
class FisherBlocks:
    """Partition of the active-set information with its Schur complement."""

    C11: np.ndarray
    C12: np.ndarray
    C21: np.ndarray
    C22: np.ndarray
    C11_2: np.ndarray


# --------------------------------------------------------------------------
# chi-square machinery
# --------------------------------------------------------------------------

def chi2_cdf(x: float, k: int) -> float:
    """Central chi-square CDF via the regularized lower incomplete gamma."""
    if x < 0:
        raise ContractViolation("x must be >= 0")
    if k < 1:
        raise ContractViolation("k must be >= 1")
    return float(gammainc(0.5 * k, 0.5 * x))


def chi2_quantile(q: float, k: int) -> float:
    """Inverse of :func:`chi2_cdf` by bracketed root finding."""
    if not 0.0 < q < 1.0:
        raise ContractViolation("q must be in (0, 1)")
    hi = 1.0
    while chi2_cdf(hi, k) < q:
        hi *= 2.0
        if hi > 1e12:
            raise SolverError("chi2_quantile bracket expansion failed")
    return float(brentq(lambda x: chi2_cdf(x, k) - q, 0.0, hi, xtol=1e-12))


def noncentral_chi2_cdf(x: float, k: int, gamma: float) -> float:
    """Noncentral chi-square CDF as a Poisson mixture of central CDFs.

    The series is truncated once the remaining Poisson tail mass drops
    below 1e-12.
    """
    if x < 0 or gamma < 0:
        raise ContractViolation("x and gamma must be >= 0")
    if gamma == 0.0:
        return chi2_cdf(x, k)
    half = 0.5 * gamma
    total = 0.0
    weight = math.exp(-half)
    cum = 0.0
    j = 0
    while cum < 1.0 - 1e-12:
        total += weight * chi2_cdf(x, k + 2 * j)
        cum += weight
        j += 1
        weight *= half / j
        if j > 100_000:  # pragma: no cover - mass accounting always ends
            break
    return float(min(total, 1.0))


def _p_value(stat: float, d: int) -> float:
    return float(max(0.0, min(1.0, 1.0 - chi2_cdf(stat, d))))


def _finalize_statistic(raw: float, method: str) -> float:
    if raw < -NEGATIVE_STAT_SLACK:
        raise SolverError(
            f"{method} statistic is {raw:.3e} < 0 beyond numerical slack; "
            "the constrained fit beat the unconstrained one, which "
            "indicates a convergence failure"
        )
    return max(raw, 0.0)


# --------------------------------------------------------------------------
# linear-hypothesis reparametrization
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class LinearReparam:
    """Orthogonal change of basis turning ``A b = 0`` into a zero subset."""

    A_tilde: np.ndarray

    @property
    def inverse(self) -> np.ndarray:
        return self.A_tilde.T

    def transform_dataset(self, data: Dataset) -> Dataset:
        # eta = X b = (X A~') (A~ b), so the rotated design is X A~'.
        return Dataset(data.X @ self.A_tilde.T, data.y, data.family)


def linear_transform(A: np.ndarray) -> LinearReparam:
    """Complete orthonormal rows ``A`` (d x p) to an orthogonal matrix.

    The complement ``B`` is built from a pivoted QR of the projector
    onto the orthocomplement of the row space, so the construction is
    deterministic.  Raises on rank-deficient ``A``.
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    d, p = A.shape
    if np.linalg.matrix_rank(A, tol=1e-10) != d:
        raise ContractViolation("A is rank deficient")
    if not np.allclose(A @ A.T, np.eye(d), atol=1e-10):
        raise ContractViolation("rows of A must be orthonormal")
    proj = np.eye(p) - A.T @ A
    q, _, _ = scipy.linalg.qr(proj, pivoting=True)
    B = q[:, : p - d].T
    # orient rows deterministically (largest-magnitude entry positive)
    for i in range(B.shape[0]):
        k = int(np.argmax(np.abs(B[i])))
        if B[i, k] < 0:
            B[i] = -B[i]
    A_tilde = np.vstack([A, B])
    if not np.allclose(A_tilde @ A_tilde.T, np.eye(p), atol=1e-9):
        raise SolverError("orthonormal completion failed")
    return LinearReparam(A_tilde=A_tilde)


def _rotate_if_linear(data: Dataset, hypothesis: HypothesisSpec):
    if hypothesis.indices is not None:
        return data, tuple(hypothesis.indices)
    reparam = linear_transform(hypothesis.A)
    d = hypothesis.A.shape[0]
    return reparam.transform_dataset(data), tuple(range(d))


# --------------------------------------------------------------------------
# penalized tests
# --------------------------------------------------------------------------

def _tuned_fits(data: Dataset, tested: tuple[int, ...], penalized: np.ndarray,
                penalty: PenaltySpec, lam, n_lambda: int):
    """Fit the full problem (BIC-tuned unless ``lam`` is given) and the
    null problem at the same lambda."""
    full_problem = FitProblem(data=data, penalty=penalty, penalized=penalized)
    if lam is None:
        grid = solver.default_lambda_grid(data, penalized, n_lambda=n_lambda)
        path = solver.fit_path(full_problem, grid)
        lam_star, full = solver.select_bic(path, full_problem)
    else:
        lam_star = float(lam)
        full = solver.fit(full_problem.with_lam(lam_star))
    if all(full.beta[j] == 0.0 for j in tested):
        # The unconstrained maximizer already lies in the null subspace,
        # so it is also the constrained maximizer; the statistic is 0.
        null = full
    else:
        null_problem = replace(full_problem.with_lam(lam_star),
                               fixed_zero=tested, init=None)
        null = solver.fit(null_problem)
    return lam_star, full, null


def _validate_tested(tested: tuple[int, ...], p: int):
    if len(tested) == 0:
        raise ContractViolation("no tested coordinates")
    if min(tested) < 0 or max(tested) >= p:
        raise ContractViolation("tested index out of range")
    if len(tested) >= p:
        raise ContractViolation("cannot test every coordinate; the penalized "
                                "complement must be nonempty")


def pplr_test(data: Dataset, hypothesis, penalty: PenaltySpec | None = None,
              lam: float | None = None, unpenalized=None,
              n_lambda: int = solver.N_LAMBDA) -> TestReport:
    """Partial penalized likelihood ratio test of ``b_tested = 0``.

    The tested coordinates are unpenalized in the full fit (optionally a
    superset may be left unpenalized via ``unpenalized``); lambda is
    chosen by BIC on the full fit and reused for the null fit.  Passing
    ``lam`` skips tuning.
    """
    hypothesis = _as_hypothesis(hypothesis)
    data, tested = _rotate_if_linear(data, hypothesis)
    _validate_tested(tested, data.p)
    if penalty is None:
        penalty = PenaltySpec.scad()
    free = set(tested) if unpenalized is None else set(int(j) for j in unpenalized)
    if not set(tested) <= free:
        raise ContractViolation("tested coordinates must be unpenalized")
    penalized = np.ones(data.p, dtype=bool)
    penalized[list(free)] = False
    if not penalized.any():
        raise ContractViolation("every coordinate is unpenalized; use olr_test")
    lam_star, full, null = _tuned_fits(data, tested, penalized, penalty, lam,
                                       n_lambda)
    stat = _finalize_statistic(2.0 * (full.objective - null.objective), "PPLR")
    d = len(tested)
    return TestReport("pplr", stat, d, _p_value(stat, d), lam_star, full, null)


def plr_test(data: Dataset, hypothesis, penalty: PenaltySpec | None = None,
             lam: float | None = None,
             n_lambda: int = solver.N_LAMBDA) -> TestReport:
    """Fully penalized likelihood ratio test (every coordinate penalized)."""
    hypothesis = _as_hypothesis(hypothesis)
    data, tested = _rotate_if_linear(data, hypothesis)
    _validate_tested(tested, data.p)
    if penalty is None:
        penalty = PenaltySpec.scad()
    penalized = np.ones(data.p, dtype=bool)
    lam_star, full, null = _tuned_fits(data, tested, penalized, penalty, lam,
                                       n_lambda)
    stat = _finalize_statistic(2.0 * (full.objective - null.objective), "PLR")
    d = len(tested)
    return TestReport("plr", stat, d, _p_value(stat, d), lam_star, full, null)


# --------------------------------------------------------------------------
# unpenalized maximum likelihood
# --------------------------------------------------------------------------

def _mle(data: Dataset, keep: np.ndarray) -> FitResult:
    """Unpenalized MLE with coefficients outside ``keep`` pinned to zero."""
    X, y = data.X, data.y
    n, p = data.n, data.p
    cols = np.flatnonzero(keep)
    beta = np.zeros(p)
    if data.family is Family.GAUSSIAN:
        Xk = X[:, cols]
        if np.linalg.matrix_rank(Xk) < len(cols):
            raise SolverError("singular design in unpenalized fit")
        coef, *_ = np.linalg.lstsq(Xk, y, rcond=None)
        beta[cols] = coef
        obj = families.log_likelihood(data, beta)
        return FitResult(beta, obj, obj, int(np.count_nonzero(beta)), 1, True, 0.0)
    # logistic: Newton iterations with step halving on the log-likelihood
    Xk = X[:, cols]
    bk = np.zeros(len(cols))
    ll = -n * math.log(2.0)
    converged = False
    it = 0
    for it in range(1, 101):
        eta = Xk @ bk
        mu = expit(eta)
        g = Xk.T @ (y - mu)
        w = mu * (1.0 - mu)
        H = (Xk * w[:, None]).T @ Xk
        try:
            step = np.linalg.solve(H + 1e-12 * np.eye(len(cols)), g)
        except np.linalg.LinAlgError as exc:
            raise SolverError("singular information in logistic MLE") from exc
        scale = 1.0
        for _ in range(40):
            cand = bk + scale * step
            ll_new = float(y @ (Xk @ cand) - np.logaddexp(0.0, Xk @ cand).sum())
            if ll_new >= ll - 1e-12:
                break
            scale *= 0.5
        else:
            raise SolverError("logistic MLE line search failed")
        delta = float(np.max(np.abs(cand - bk)))
        bk, ll = cand, ll_new
        if np.max(np.abs(bk)) > SEPARATION_BOUND:
            raise SolverError("logistic MLE diverged (possible separation)")
        if delta < 1e-10:
            converged = True
            break
    if not converged:
        raise SolverError("logistic MLE did not converge")
    beta[cols] = bk
    return FitResult(beta, ll, ll, int(np.count_nonzero(beta)), it, True, 0.0)


def olr_test(data: Dataset, hypothesis) -> TestReport:
    """Classical (unpenalized) likelihood ratio test; needs ``n > p``."""
    hypothesis = _as_hypothesis(hypothesis)
    data, tested = _rotate_if_linear(data, hypothesis)
    _validate_tested(tested, data.p)
    if data.n <= data.p:
        raise ContractViolation("the unpenalized MLE needs n > p")
    keep_full = np.ones(data.p, dtype=bool)
    keep_null = keep_full.copy()
    keep_null[list(tested)] = False
    full = _mle(data, keep_full)
    null = _mle(data, keep_null)
    stat = _finalize_statistic(2.0 * (full.objective - null.objective), "OLR")
    d = len(tested)
    return TestReport("olr", stat, d, _p_value(stat, d), 0.0, full, null)


# --------------------------------------------------------------------------
# noncentrality
# --------------------------------------------------------------------------

def fisher_blocks(info: np.ndarray, d: int) -> FisherBlocks:
    """Partition ``info`` (tested-first ordering) and form C11.2."""
    C11 = info[:d, :d]
    C12 = info[:d, d:]
    C21 = info[d:, :d]
    C22 = info[d:, d:]
    if C22.size:
        try:
            C11_2 = C11 - C12 @ np.linalg.solve(C22, C21)
        except np.linalg.LinAlgError as exc:
            raise ContractViolation(
                "singular nuisance information block C22"
            ) from exc
    else:
        C11_2 = C11.copy()
    return FisherBlocks(C11, C12, C21, C22, C11_2)


def noncentral_param(data: Dataset, beta0: np.ndarray, active, tested,
                     delta: np.ndarray) -> float:
    """``gamma = delta' C11.2 delta`` from the active-set information."""
    active = [int(j) for j in active]
    tested = [int(j) for j in tested]
    if not set(tested) <= set(active):
        raise ContractViolation("tested must be a subset of active")
    delta = np.asarray(delta, dtype=np.float64)
    if delta.shape != (len(tested),):
        raise ContractViolation("delta length must match the tested set")
    order = tested + [j for j in active if j not in tested]
    info = families.fisher_information(data, np.asarray(beta0, float), order)
    blocks = fisher_blocks(info, len(tested))
    return float(delta @ blocks.C11_2 @ delta)
