"""Monte-Carlo harness: size/power experiments and selection metrics.

Two generative designs are provided: a Gaussian linear model and a
Bernoulli-logit model, both with coefficient template

    beta0 = (delta / sqrt(n), 3, 1.5, 2, 1, 0, ..., 0)

so the first coordinate carries a local alternative of order
``n**-1/2``.  Covariates are drawn iid standard normal and then
standardized to the (mean 0, sum of squares n) convention; the response
is generated from the standardized design, which makes ``beta0`` the
exact estimand of the fitted parametrization.

Replicates are keyed by ``(seed, rep_index, attempt)`` through
``numpy.random.SeedSequence`` spawn keys, so runs are deterministic,
order-independent and safe to execute in parallel.  Logistic replicates
whose unpenalized MLE diverges (complete separation) are retried on a
fresh substream and counted.
"""

from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from enum import Enum

import numpy as np
from scipy.special import expit

from . import inference
from .exceptions import ContractViolation, SolverError
from .families import Dataset, Family

METHODS = ("pplr", "plr", "olr")
MAX_ATTEMPTS = 20


class Example(str, Enum):
    LINEAR = "linear"
    LOGISTIC = "logistic"


@dataclass(frozen=True)
class SimDesign:
    example: Example
    n: int
    p: int
    delta: float = 0.0
    n_reps: int = 200
    seed: int = 0
    alpha: float = 0.05

    def __post_init__(self):
        object.__setattr__(self, "example", Example(self.example))
        if self.p < 5:
            raise ContractViolation("the coefficient template needs p >= 5")
        if self.n_reps < 1:
            raise ContractViolation("n_reps must be >= 1")
        if not 0.0 < self.alpha < 1.0:
            raise ContractViolation("alpha must be in (0, 1)")

    @property
    def family(self) -> Family:
        return Family.GAUSSIAN if self.example is Example.LINEAR else Family.LOGISTIC


def true_beta(design: SimDesign) -> np.ndarray:
    beta = np.zeros(design.p)
    beta[0] = design.delta / math.sqrt(design.n)
    beta[1:5] = (3.0, 1.5, 2.0, 1.0)
    return beta


def _rng(design: SimDesign, rep_index: int, attempt: int) -> np.random.Generator:
    ss = np.random.SeedSequence(entropy=design.seed,
                                spawn_key=(rep_index, attempt))
    return np.random.Generator(np.random.Philox(ss))


def generate(design: SimDesign, rep_index: int, attempt: int = 0):
    """Draw one replicate; returns ``(dataset, beta0)``."""
    rng = _rng(design, rep_index, attempt)
    n, p = design.n, design.p
    X = rng.standard_normal((n, p))
    X -= X.mean(axis=0)
    X /= np.sqrt((X * X).sum(axis=0) / n)
    beta0 = true_beta(design)
    eta = X @ beta0
    if design.example is Example.LINEAR:
        y = eta + rng.standard_normal(n)
        y -= y.mean()
    else:
        y = (rng.random(n) < expit(eta)).astype(np.float64)
    return Dataset(X, y, design.family), beta0


def metrics(beta_hat: np.ndarray, beta_true: np.ndarray):
    """(L2, L1, C, IC): losses plus correct-zero / wrongly-excluded counts."""
    beta_hat = np.asarray(beta_hat, float)
    beta_true = np.asarray(beta_true, float)
    if beta_hat.shape != beta_true.shape:
        raise ContractViolation("coefficient vectors differ in length")
    err = beta_hat - beta_true
    c = int(np.sum((beta_true == 0.0) & (beta_hat == 0.0)))
    ic = int(np.sum((beta_true != 0.0) & (beta_hat == 0.0)))
    return float(np.linalg.norm(err)), float(np.abs(err).sum()), c, ic


def qq_data(statistics: np.ndarray, d: int) -> np.ndarray:
    """Pairs (chi2_d quantile at (i-0.5)/m, i-th order statistic)."""
    stats = np.sort(np.asarray(statistics, float))
    m = stats.size
    if m == 0:
        raise ContractViolation("no statistics to plot")
    theo = np.array([inference.chi2_quantile((i - 0.5) / m, d)
                     for i in range(1, m + 1)])
    return np.column_stack([theo, stats])


# --------------------------------------------------------------------------
# per-replicate work
# --------------------------------------------------------------------------

_TESTED = (0,)  # the hypothesis of the experiments: H0: beta_01 = 0


def _one_attempt(design: SimDesign, rep: int, attempt: int, methods,
                 n_lambda: int) -> dict:
    data, beta0 = generate(design, rep, attempt)
    out: dict[str, tuple] = {}
    for method in methods:
        if method == "pplr":
            rep_t = inference.pplr_test(data, _TESTED, n_lambda=n_lambda)
        elif method == "plr":
            rep_t = inference.plr_test(data, _TESTED, n_lambda=n_lambda)
        elif method == "olr":
            rep_t = inference.olr_test(data, _TESTED)
        else:
            raise ContractViolation(f"unknown method {method!r}")
        if not rep_t.converged:
            raise SolverError(f"{method} fit did not converge")
        l2, l1, c, ic = metrics(rep_t.full_fit.beta, beta0)
        out[method] = (l2, l1, c, ic, rep_t.statistic, rep_t.p_value)
    return out


def _run_rep(args):
    design, rep, methods, n_lambda = args
    attempt = 0
    while True:
        try:
            return rep, attempt, _one_attempt(design, rep, attempt, methods,
                                              n_lambda)
        except SolverError:
            attempt += 1
            if attempt >= MAX_ATTEMPTS:
                return rep, attempt, None


# --------------------------------------------------------------------------
# study driver and report
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class MethodSummary:
    method: str
    rejection_rate: float
    statistics: np.ndarray
    p_values: np.ndarray
    l2_mean: float
    l2_sd: float | None
    l1_mean: float
    l1_sd: float | None
    c_mean: float | None
    c_sd: float | None
    ic_mean: float | None
    ic_sd: float | None
    qq: np.ndarray


@dataclass(frozen=True)
class SimReport:
    design: SimDesign
    methods: dict
    retries: int
    excluded: tuple[int, ...]


def _sd(x: np.ndarray) -> float | None:
    return float(np.std(x, ddof=1)) if x.size > 1 else None


def run_study(design: SimDesign, methods=METHODS, n_jobs: int = 1,
              n_lambda: int = 100) -> SimReport:
    """Run all replicates and aggregate per-method metrics.

    ``n_jobs > 1`` fans replicates out to worker processes; results are
    folded in replicate order either way, so the report is bitwise
    independent of the schedule.
    """
    methods = tuple(m for m in METHODS if m in set(methods))
    if not methods:
        raise ContractViolation("no known methods requested")
    jobs = [(design, rep, methods, n_lambda) for rep in range(design.n_reps)]
    if n_jobs > 1:
        chunk = max(1, design.n_reps // (4 * n_jobs))
        with ProcessPoolExecutor(max_workers=n_jobs) as pool:
            raw = list(pool.map(_run_rep, jobs, chunksize=chunk))
    else:
        raw = [_run_rep(j) for j in jobs]
    raw.sort(key=lambda t: t[0])

    retries = sum(att for _, att, rec in raw if rec is not None)
    excluded = tuple(rep for rep, _, rec in raw if rec is None)
    records = [rec for _, _, rec in raw if rec is not None]
    if not records:
        raise SolverError("every replicate failed")

    summaries = {}
    for method in methods:
        cols = np.array([rec[method] for rec in records])
        l2, l1, c, ic, stat, pval = cols.T
        with_sel = method in ("pplr", "plr")
        summaries[method] = MethodSummary(
            method=method,
            rejection_rate=float(np.mean(pval < design.alpha)),
            statistics=stat,
            p_values=pval,
            l2_mean=float(l2.mean()),
            l2_sd=_sd(l2),
            l1_mean=float(l1.mean()),
            l1_sd=_sd(l1),
            c_mean=float(c.mean()) if with_sel else None,
            c_sd=_sd(c) if with_sel else None,
            ic_mean=float(ic.mean()) if with_sel else None,
            ic_sd=_sd(ic) if with_sel else None,
            qq=qq_data(stat, len(_TESTED)),
        )
    return SimReport(design=design, methods=summaries, retries=retries,
                     excluded=excluded)


def default_n_jobs() -> int:
    """Simulate parallelism: PPLR_THREADS if set, else available cores."""
    env = os.environ.get("PPLR_THREADS", "").strip()
    if env:
        value = int(env)
        if value < 1:
            raise ContractViolation("PPLR_THREADS must be >= 1")
        return value
    return os.cpu_count() or 1


# --------------------------------------------------------------------------
# serialization
# --------------------------------------------------------------------------

def report_to_dict(report: SimReport) -> dict:
    d = report.design
    out = {
        "design": {
            "example": d.example.value,
            "n": d.n,
            "p": d.p,
            "delta": d.delta,
            "n_reps": d.n_reps,
            "seed": d.seed,
            "alpha": d.alpha,
        },
        "retries": report.retries,
        "excluded_reps": list(report.excluded),
        "methods": {},
    }
    for name, s in report.methods.items():
        out["methods"][name] = {
            "rejection_rate": s.rejection_rate,
            "l2_mean": s.l2_mean, "l2_sd": s.l2_sd,
            "l1_mean": s.l1_mean, "l1_sd": s.l1_sd,
            "c_mean": s.c_mean, "c_sd": s.c_sd,
            "ic_mean": s.ic_mean, "ic_sd": s.ic_sd,
            "statistics": [float(v) for v in s.statistics],
            "p_values": [float(v) for v in s.p_values],
        }
    return out


def write_reports_json(reports: list[SimReport], path: str):
    payload = {"reports": [report_to_dict(r) for r in reports]}
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_selection_csv(reports: list[SimReport], path: str):
    cols = ("l2_mean", "l2_sd", "l1_mean", "l1_sd",
            "c_mean", "c_sd", "ic_mean", "ic_sd")
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("n,p,delta,method," + ",".join(cols) + "\n")
        for rep in reports:
            d = rep.design
            for name, s in rep.methods.items():
                vals = [getattr(s, c) for c in cols]
                cells = ["" if v is None else repr(float(v)) for v in vals]
                fh.write(f"{d.n},{d.p},{d.delta!r},{name}," + ",".join(cells) + "\n")


def write_rejection_csv(reports: list[SimReport], path: str):
    deltas = [r.design.delta for r in reports]
    methods = list(reports[0].methods)
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("method," + ",".join(f"delta={d!r}" for d in deltas) + "\n")
        for m in methods:
            cells = [repr(float(r.methods[m].rejection_rate)) for r in reports]
            fh.write(m + "," + ",".join(cells) + "\n")


def write_qq_csv(reports: list[SimReport], method: str, path: str):
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write("delta,theoretical,statistic\n")
        for rep in reports:
            if method not in rep.methods:
                continue
            for theo, stat in rep.methods[method].qq:
                fh.write(f"{rep.design.delta!r},{theo!r},{stat!r}\n")
