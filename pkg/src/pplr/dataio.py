"""CSV ingestion, standardization and the prostate-cancer workflow.

Standardization follows the (column mean 0, column sum of squares n)
convention with a centered Gaussian response, i.e. columns are divided
by the n-denominator standard deviation.  The returned transform record
holds enough to map coefficients back to the raw scale.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from importlib import resources

import numpy as np

from . import inference, solver
from .exceptions import ContractViolation
from .families import Dataset, Family
from .penalties import PenaltySpec
from .solver import FitProblem

PROSTATE_PREDICTORS = ("lcavol", "lweight", "age", "lbph", "svi", "lcp",
                       "gleason", "pgg45")
PROSTATE_RESPONSE = "lpsa"


@dataclass(frozen=True)
class TableSpec:
    path: str
    response_column: str
    predictor_columns: tuple[str, ...]
    family: Family = Family.GAUSSIAN

    def __post_init__(self):
        preds = tuple(self.predictor_columns)
        if self.response_column in preds:
            raise ContractViolation("response column listed among predictors")
        if len(set(preds)) != len(preds):
            raise ContractViolation("repeated predictor column")
        object.__setattr__(self, "predictor_columns", preds)
        object.__setattr__(self, "family", Family(self.family))


def load_csv(spec: TableSpec) -> Dataset:
    """Load the named columns, in declared order, as a Dataset.

    Parsing failures carry the 1-based data-row number and column name.
    """
    with open(spec.path, "r", encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ContractViolation(f"{spec.path}: empty file") from None
        header = [h.strip() for h in header]
        wanted = list(spec.predictor_columns) + [spec.response_column]
        missing = [c for c in wanted if c not in header]
        if missing:
            raise ContractViolation(
                f"{spec.path}: missing column(s) {', '.join(missing)}"
            )
        idx = {c: header.index(c) for c in wanted}
        rows = []
        for rownum, row in enumerate(reader, start=1):
            if not row or all(not cell.strip() for cell in row):
                continue
            vals = []
            for c in wanted:
                cell = row[idx[c]].strip() if idx[c] < len(row) else ""
                if cell == "":
                    raise ContractViolation(
                        f"{spec.path}: row {rownum}, column '{c}': missing value"
                    )
                try:
                    vals.append(float(cell))
                except ValueError:
                    raise ContractViolation(
                        f"{spec.path}: row {rownum}, column '{c}': "
                        f"cannot parse {cell!r}"
                    ) from None
            rows.append(vals)
    if not rows:
        raise ContractViolation(f"{spec.path}: no data rows")
    table = np.asarray(rows, dtype=np.float64)
    return Dataset(table[:, :-1], table[:, -1], spec.family,
                   names=spec.predictor_columns)


@dataclass(frozen=True)
class StandardizeTransform:
    """Record of the centering/scaling applied by :func:`standardize`."""

    x_mean: np.ndarray
    x_scale: np.ndarray
    y_mean: float

    def coefficients_to_raw(self, beta: np.ndarray) -> tuple[float, np.ndarray]:
        """Map standardized-scale coefficients to (intercept, raw betas)."""
        raw = np.asarray(beta, float) / self.x_scale
        intercept = self.y_mean - float(self.x_mean @ raw)
        return intercept, raw


def standardize(data: Dataset) -> tuple[Dataset, StandardizeTransform]:
    """Center and rescale columns to sum of squares n; center Gaussian y."""
    X = data.X
    mean = X.mean(axis=0)
    Xc = X - mean
    scale = np.sqrt((Xc * Xc).sum(axis=0) / data.n)
    bad = np.flatnonzero(scale <= 1e-12 * np.maximum(1.0, np.abs(mean)))
    if bad.size:
        name = data.names[bad[0]] if data.names else f"column {bad[0]}"
        raise ContractViolation(f"zero-variance column: {name}")
    Xs = Xc / scale
    if data.family is Family.GAUSSIAN:
        y_mean = float(data.y.mean())
        ys = data.y - y_mean
    else:
        y_mean = 0.0
        ys = data.y
    out = Dataset(Xs, ys, data.family, names=data.names)
    return out, StandardizeTransform(mean, scale, y_mean)


# --------------------------------------------------------------------------
# prostate-cancer analysis
# --------------------------------------------------------------------------

def prostate_path() -> str:
    return str(resources.files("pplr").joinpath("data/prostate.csv"))


def load_prostate() -> Dataset:
    spec = TableSpec(prostate_path(), PROSTATE_RESPONSE, PROSTATE_PREDICTORS,
                     Family.GAUSSIAN)
    return load_csv(spec)


@dataclass(frozen=True)
class ProstateReport:
    """Coefficient and p-value tables for the prostate workflow."""

    variables: tuple[str, ...]
    coefficients: dict       # method -> length-8 array (standardized scale)
    r_squared: dict          # method -> float
    p_values: dict           # method -> length-8 array
    lambda_pl: float
    sigma_hat: float


def _r_squared(y: np.ndarray, fitted: np.ndarray) -> float:
    rss = float(np.sum((y - fitted) ** 2))
    tss = float(np.sum((y - y.mean()) ** 2))
    return 1.0 - rss / tss


def prostate_analysis(penalty: PenaltySpec | None = None,
                      n_lambda: int = solver.N_LAMBDA) -> ProstateReport:
    """Least-squares, penalized and partial-penalized fits plus
    per-predictor likelihood-ratio p-values.

    Coefficient columns: LS, SCAD-penalized (BIC-tuned) and the partial
    fit with ``svi`` unpenalized.  For the partial p-value of predictor
    j, the problem is re-posed with predictor j as the unpenalized
    coordinate.  Gaussian tests are computed on the response rescaled by
    the full least-squares noise estimate (sigma^2 = RSS/n), matching
    the chi-square calibration of the classical likelihood-ratio test
    with unknown variance.
    """
    if penalty is None:
        penalty = PenaltySpec.scad()
    raw = load_prostate()
    data, _ = standardize(raw)
    names = data.names
    X, y = data.X, data.y
    n, p = data.n, data.p

    # least squares
    ls_coef, *_ = np.linalg.lstsq(X, y, rcond=None)
    coefficients = {"ls": ls_coef}
    r_squared = {"ls": _r_squared(y, X @ ls_coef)}

    # fully penalized fit, BIC-tuned
    all_mask = np.ones(p, dtype=bool)
    pl_problem = FitProblem(data=data, penalty=penalty, penalized=all_mask)
    grid = solver.default_lambda_grid(data, all_mask, n_lambda=n_lambda)
    lam_pl, pl_fit = solver.select_bic(solver.fit_path(pl_problem, grid),
                                       pl_problem)
    coefficients["pl"] = pl_fit.beta
    r_squared["pl"] = _r_squared(y, X @ pl_fit.beta)

    # partial fit with svi unpenalized
    svi = names.index("svi")
    ppl_mask = all_mask.copy()
    ppl_mask[svi] = False
    ppl_problem = FitProblem(data=data, penalty=penalty, penalized=ppl_mask)
    grid = solver.default_lambda_grid(data, ppl_mask, n_lambda=n_lambda)
    _, ppl_fit = solver.select_bic(solver.fit_path(ppl_problem, grid),
                                   ppl_problem)
    coefficients["ppl"] = ppl_fit.beta
    r_squared["ppl"] = _r_squared(y, X @ ppl_fit.beta)

    # noise scale for the test statistics
    sigma_hat = math.sqrt(float(np.sum((y - X @ ls_coef) ** 2)) / n)
    data_t = Dataset(X, y / sigma_hat, Family.GAUSSIAN, names=names)

    p_values = {m: np.zeros(p) for m in ("lr", "plr", "pplr")}
    for j in range(p):
        p_values["lr"][j] = inference.olr_test(data_t, [j]).p_value
        p_values["plr"][j] = inference.plr_test(
            data_t, [j], penalty=penalty, n_lambda=n_lambda).p_value
        p_values["pplr"][j] = inference.pplr_test(
            data_t, [j], penalty=penalty, n_lambda=n_lambda).p_value

    return ProstateReport(
        variables=names,
        coefficients=coefficients,
        r_squared=r_squared,
        p_values=p_values,
        lambda_pl=lam_pl,
        sigma_hat=sigma_hat,
    )
