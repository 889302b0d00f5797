"""GLM families: exact log-likelihood, score and Fisher information.

Two canonical-link families are supported:

* ``Family.GAUSSIAN`` -- linear model ``y = X b + e`` with unit noise
  variance.  The noise scale is treated as known and fixed at 1, so the
  log-likelihood is fully specified; callers working with data whose
  scale is unknown should rescale the response first (see
  :mod:`pplr.dataio`).
* ``Family.LOGISTIC`` -- Bernoulli responses with logit link.

Both families have canonical links, so observed and expected information
coincide and one routine serves both roles.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from typing import Sequence

import numpy as np
from scipy.special import expit

from .exceptions import ContractViolation

LOG_2PI = float(np.log(2.0 * np.pi))


class Family(str, Enum):
    GAUSSIAN = "gaussian"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class Dataset:
    """A design matrix, response vector and family tag.

    ``names`` is optional metadata (CSV headers) used by the CLI and the
    report writers; it plays no role in the numerics.
    """

    X: np.ndarray
    y: np.ndarray
    family: Family = Family.GAUSSIAN
    names: tuple[str, ...] | None = None

    def __post_init__(self):
        X = np.ascontiguousarray(np.asarray(self.X, dtype=np.float64))
        y = np.ascontiguousarray(np.asarray(self.y, dtype=np.float64))
        if X.ndim != 2:
            raise ContractViolation("X must be a 2-d array")
        if y.ndim != 1:
            raise ContractViolation("y must be a 1-d array")
        if X.shape[0] != y.shape[0]:
            raise ContractViolation(
                f"X has {X.shape[0]} rows but y has {y.shape[0]} entries"
            )
        if X.shape[0] < 1 or X.shape[1] < 1:
            raise ContractViolation("need at least one observation and one covariate")
        if not np.all(np.isfinite(X)):
            raise ContractViolation("X contains non-finite entries")
        if not np.all(np.isfinite(y)):
            raise ContractViolation("y contains non-finite entries")
        family = Family(self.family)
        if family is Family.LOGISTIC and not np.all((y == 0.0) | (y == 1.0)):
            raise ContractViolation("logistic responses must be 0/1")
        if self.names is not None:
            names = tuple(self.names)
            if len(names) != X.shape[1]:
                raise ContractViolation("names must match the number of columns")
            object.__setattr__(self, "names", names)
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "y", y)
        object.__setattr__(self, "family", family)

    @property
    def n(self) -> int:
        return self.X.shape[0]

    @property
    def p(self) -> int:
        return self.X.shape[1]


@dataclass(frozen=True)
class LikelihoodEval:
    """Log-likelihood with its first two derivatives at a point."""

    loglik: float
    score: np.ndarray
    neg_hessian: np.ndarray


def _check_beta(data: Dataset, beta: np.ndarray) -> np.ndarray:
    beta = np.asarray(beta, dtype=np.float64)
    if beta.shape != (data.p,):
        raise ContractViolation(
            f"beta has shape {beta.shape}, expected ({data.p},)"
        )
    if not np.all(np.isfinite(beta)):
        raise ContractViolation("beta contains non-finite entries")
    return beta


def log_likelihood(data: Dataset, beta: np.ndarray) -> float:
    """Exact log-likelihood of ``beta`` in natural-log units.

    Gaussian (sigma = 1): ``-||y - X b||^2 / 2 - (n/2) log(2 pi)``.
    Logistic: ``sum_i [y_i eta_i - log(1 + exp(eta_i))]`` evaluated in the
    overflow-safe ``logaddexp`` form (|eta| can exceed 700 during solver
    iterations).
    """
    beta = _check_beta(data, beta)
    eta = data.X @ beta
    if data.family is Family.GAUSSIAN:
        r = data.y - eta
        return float(-0.5 * (r @ r) - 0.5 * data.n * LOG_2PI)
    return float(data.y @ eta - np.logaddexp(0.0, eta).sum())


def score(data: Dataset, beta: np.ndarray) -> np.ndarray:
    """Gradient of the log-likelihood: ``X'(y - mu)``."""
    beta = _check_beta(data, beta)
    eta = data.X @ beta
    mu = eta if data.family is Family.GAUSSIAN else expit(eta)
    return data.X.T @ (data.y - mu)


def neg_hessian(data: Dataset, beta: np.ndarray) -> np.ndarray:
    """Observed information ``-d^2 L/db db'`` (equals expected here)."""
    beta = _check_beta(data, beta)
    if data.family is Family.GAUSSIAN:
        return data.X.T @ data.X
    mu = expit(data.X @ beta)
    w = mu * (1.0 - mu)
    return (data.X * w[:, None]).T @ data.X


def evaluate(data: Dataset, beta: np.ndarray) -> LikelihoodEval:
    return LikelihoodEval(
        loglik=log_likelihood(data, beta),
        score=score(data, beta),
        neg_hessian=neg_hessian(data, beta),
    )


def fisher_information(
    data: Dataset, beta: np.ndarray, subset: Sequence[int] | None = None
) -> np.ndarray:
    """Per-observation Fisher information restricted to ``subset``.

    Returns ``(X' W X / n)`` (W = I for Gaussian, ``diag(mu(1-mu))`` for
    logistic) with rows and columns taken in the order given by
    ``subset``.  ``subset=None`` means all coordinates.
    """
    beta = _check_beta(data, beta)
    if subset is None:
        idx = np.arange(data.p)
    else:
        idx = np.asarray(list(subset), dtype=np.intp)
        if idx.size == 0:
            raise ContractViolation("subset must be nonempty")
        if idx.min() < 0 or idx.max() >= data.p or len(set(idx.tolist())) != idx.size:
            raise ContractViolation("subset indices out of range or repeated")
    Xs = data.X[:, idx]
    if data.family is Family.GAUSSIAN:
        return (Xs.T @ Xs) / data.n
    mu = expit(data.X @ beta)
    w = mu * (1.0 - mu)
    return ((Xs * w[:, None]).T @ Xs) / data.n
