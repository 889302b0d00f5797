"""Command-line surface: fit, test, path, simulate, prostate.

All randomness flows from ``--seed`` (default ``DEFAULT_SEED``); no
wall-clock entropy is used anywhere, so re-running a command with the
same flags reproduces its outputs byte for byte.  ``PPLR_THREADS`` caps
the replicate parallelism of ``simulate`` (default: available cores).

Exit codes: 0 success, 2 contract violation / bad arguments, 3 a fit did
not converge.
"""

from __future__ import annotations

import argparse
import csv
import json
import math
import sys
from pathlib import Path

import numpy as np

from . import dataio, inference, simulate, solver
from .exceptions import ContractViolation, SolverError
from .families import Dataset, Family
from .penalties import MCP_DEFAULT_A, SCAD_DEFAULT_A, PenaltyKind, PenaltySpec
from .solver import FitProblem

DEFAULT_SEED = 12345


def _write_json(payload: dict, path: Path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _split_names(arg: str | None) -> list[str]:
    if not arg:
        return []
    return [s.strip() for s in arg.split(",") if s.strip()]


def _all_columns(path: str) -> list[str]:
    with open(path, "r", encoding="utf-8", newline="") as fh:
        try:
            header = next(csv.reader(fh))
        except StopIteration:
            raise ContractViolation(f"{path}: empty file") from None
    return [h.strip() for h in header]


def _load(args) -> Dataset:
    predictors = _split_names(getattr(args, "predictors", None))
    if not predictors:
        predictors = [c for c in _all_columns(args.data) if c != args.response]
    spec = dataio.TableSpec(args.data, args.response, tuple(predictors),
                            Family(args.family))
    data = dataio.load_csv(spec)
    standardized, _ = dataio.standardize(data)
    return standardized


def _penalty(args) -> PenaltySpec:
    kind = PenaltyKind(args.penalty)
    if args.a is not None:
        a = args.a
    else:
        a = MCP_DEFAULT_A if kind is PenaltyKind.MCP else SCAD_DEFAULT_A
    if kind is PenaltyKind.NONE:
        return PenaltySpec.none()
    return PenaltySpec(kind, 0.0, a)


def _indices(names, wanted, what: str) -> list[int]:
    out = []
    for w in wanted:
        if w not in names:
            raise ContractViolation(f"unknown {what} column: {w}")
        out.append(names.index(w))
    return out


def _mask(data: Dataset, unpenalized: list[int]) -> np.ndarray:
    mask = np.ones(data.p, dtype=bool)
    mask[unpenalized] = False
    return mask


def _fit_with_tuning(data: Dataset, penalty: PenaltySpec, mask, args):
    problem = FitProblem(data=data, penalty=penalty, penalized=mask)
    sweeps = args.max_sweeps
    if penalty.kind is PenaltyKind.NONE:
        return solver.fit(problem, max_sweeps=sweeps), 0.0
    if args.lam is not None:
        res = solver.fit(problem.with_lam(args.lam), max_sweeps=sweeps)
        return res, args.lam
    grid = solver.default_lambda_grid(data, mask, n_lambda=args.n_lambdas)
    path = solver.fit_path(problem, grid, max_sweeps=sweeps)
    lam, res = solver.select_bic(path, problem)
    return res, lam


def _sigma_for_tests(data: Dataset, args) -> float:
    if data.family is Family.LOGISTIC:
        return 1.0
    if args.sigma != "mle":
        value = float(args.sigma)
        if not value > 0:
            raise ContractViolation("--sigma must be positive")
        return value
    if data.n <= data.p:
        raise ContractViolation(
            "--sigma mle needs n > p; pass a numeric value instead")
    coef, *_ = np.linalg.lstsq(data.X, data.y, rcond=None)
    return math.sqrt(float(np.sum((data.y - data.X @ coef) ** 2)) / data.n)


def cmd_fit(args) -> int:
    data = _load(args)
    penalty = _penalty(args)
    unpen = _indices(data.names, _split_names(args.unpenalized), "unpenalized")
    res, lam = _fit_with_tuning(data, penalty, _mask(data, unpen), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "coefficients.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("name,estimate\n")
        for name, b in zip(data.names, res.beta):
            fh.write(f"{name},{float(b)!r}\n")
    _write_json(
        {
            "objective": res.objective,
            "df": res.df,
            "lambda": lam,
            "iterations": res.iterations,
            "converged": res.converged,
        },
        out / "fit.json",
    )
    return 0 if res.converged else 3


def cmd_test(args) -> int:
    data = _load(args)
    penalty = _penalty(args)
    tested = _indices(data.names, _split_names(args.test), "test")
    if not tested:
        raise ContractViolation("--test must name at least one column")
    sigma = _sigma_for_tests(data, args)
    if sigma != 1.0:
        data = Dataset(data.X, data.y / sigma, data.family, names=data.names)
    if args.method == "pplr":
        unpen_names = _split_names(args.unpenalized)
        unpen = _indices(data.names, unpen_names, "unpenalized") if unpen_names \
            else list(tested)
        if not set(tested) <= set(unpen):
            raise ContractViolation("--method pplr requires --test to be a "
                                    "subset of --unpenalized")
        report = inference.pplr_test(data, tested, penalty=penalty,
                                     lam=args.lam, unpenalized=unpen,
                                     n_lambda=args.n_lambdas)
    elif args.method == "plr":
        report = inference.plr_test(data, tested, penalty=penalty,
                                    lam=args.lam, n_lambda=args.n_lambdas)
    else:
        report = inference.olr_test(data, tested)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    _write_json(
        {
            "method": report.method,
            "statistic": report.statistic,
            "df": report.df,
            "p_value": report.p_value,
            "lambda_used": report.lambda_used,
        },
        out / "test.json",
    )
    return 0 if report.converged else 3


def cmd_path(args) -> int:
    data = _load(args)
    penalty = _penalty(args)
    if penalty.kind is PenaltyKind.NONE:
        raise ContractViolation("a lambda path needs a penalty")
    unpen = _indices(data.names, _split_names(args.unpenalized), "unpenalized")
    mask = _mask(data, unpen)
    problem = FitProblem(data=data, penalty=penalty, penalized=mask)
    grid = solver.default_lambda_grid(data, mask, n_lambda=args.n_lambdas)
    path = solver.fit_path(problem, grid)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "path.csv", "w", encoding="utf-8", newline="") as fh:
        fh.write("lambda,df,objective,bic,"
                 + ",".join(f"coef_{n}" for n in data.names) + "\n")
        for res in path:
            bic = solver.bic_value(res, problem)
            cells = [repr(float(res.lam)), str(res.df),
                     repr(float(res.objective)), repr(float(bic))]
            cells += [repr(float(b)) for b in res.beta]
            fh.write(",".join(cells) + "\n")
    ok = all(r.converged for r in path)
    return 0 if ok else 3


def cmd_simulate(args) -> int:
    deltas = [float(s) for s in _split_names(args.delta)] or [0.0]
    example = simulate.Example.LINEAR if args.example == "1" \
        else simulate.Example.LOGISTIC
    methods = tuple(_split_names(args.methods)) or simulate.METHODS
    n_jobs = simulate.default_n_jobs()
    reports = []
    for delta in deltas:
        design = simulate.SimDesign(example=example, n=args.n, p=args.p,
                                    delta=delta, n_reps=args.reps,
                                    seed=args.seed, alpha=args.alpha)
        reports.append(simulate.run_study(design, methods=methods,
                                          n_jobs=n_jobs,
                                          n_lambda=args.n_lambdas))
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    simulate.write_reports_json(reports, str(out / "report.json"))
    if args.format == "csv":
        simulate.write_selection_csv(reports, str(out / "selection.csv"))
        simulate.write_rejection_csv(reports, str(out / "rejection.csv"))
        for m in methods:
            simulate.write_qq_csv(reports, m, str(out / f"qq_{m}.csv"))
    return 0


def cmd_prostate(args) -> int:
    penalty = PenaltySpec.scad(a=args.a if args.a is not None else SCAD_DEFAULT_A)
    report = dataio.prostate_analysis(penalty=penalty, n_lambda=args.n_lambdas)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.format == "csv":
        with open(out / "table5.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("variable,ls,scad_pl,scad_ppl\n")
            for i, v in enumerate(report.variables):
                fh.write(f"{v},{report.coefficients['ls'][i]!r},"
                         f"{report.coefficients['pl'][i]!r},"
                         f"{report.coefficients['ppl'][i]!r}\n")
            fh.write(f"R2,{report.r_squared['ls']!r},"
                     f"{report.r_squared['pl']!r},{report.r_squared['ppl']!r}\n")
        with open(out / "table6.csv", "w", encoding="utf-8", newline="") as fh:
            fh.write("variable,lr,scad_plr,scad_pplr\n")
            for i, v in enumerate(report.variables):
                fh.write(f"{v},{report.p_values['lr'][i]!r},"
                         f"{report.p_values['plr'][i]!r},"
                         f"{report.p_values['pplr'][i]!r}\n")
    _write_json(
        {
            "variables": list(report.variables),
            "coefficients": {k: [float(v) for v in arr]
                             for k, arr in report.coefficients.items()},
            "r_squared": {k: float(v) for k, v in report.r_squared.items()},
            "p_values": {k: [float(v) for v in arr]
                         for k, arr in report.p_values.items()},
            "lambda_pl": report.lambda_pl,
            "sigma_hat": report.sigma_hat,
        },
        out / "prostate.json",
    )
    return 0


def _add_data_flags(sp, with_penalty=True, with_tuning=True):
    sp.add_argument("--data", required=True, help="input CSV path")
    sp.add_argument("--response", required=True, help="response column name")
    sp.add_argument("--predictors",
                    help="comma list of predictor columns (default: all others)")
    sp.add_argument("--family", choices=["gaussian", "logistic"],
                    default="gaussian")
    if with_penalty:
        sp.add_argument("--penalty", choices=["scad", "mcp", "lasso", "none"],
                        default="scad")
        sp.add_argument("--a", type=float, default=None,
                        help="penalty shape (default 3.7 for SCAD, 3 for MCP)")
        sp.add_argument("--unpenalized", default="",
                        help="comma list of columns left unpenalized")
    if with_tuning:
        sp.add_argument("--lambda", dest="lam", type=float, default=None,
                        help="fixed tuning parameter (skips BIC)")
        sp.add_argument("--tune", choices=["bic"], default="bic")
    sp.add_argument("--n-lambdas", type=int, default=solver.N_LAMBDA)
    sp.add_argument("--max-sweeps", type=int, default=solver.DEFAULT_MAX_SWEEPS)
    sp.add_argument("--out", required=True, help="output directory")
    sp.add_argument("--format", choices=["csv", "json"], default="csv")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="pplr",
        description="Partial penalized likelihood fitting and testing",
    )
    sub = ap.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("fit", help="penalized or unpenalized fit")
    _add_data_flags(sp)
    sp.set_defaults(func=cmd_fit)

    sp = sub.add_parser("test", help="likelihood-ratio test of named columns")
    _add_data_flags(sp)
    sp.add_argument("--test", required=True,
                    help="comma list of columns under H0: beta = 0")
    sp.add_argument("--method", choices=["pplr", "plr", "olr"], default="pplr")
    sp.add_argument("--sigma", default="mle",
                    help="gaussian noise scale: 'mle' or a number "
                         "(use 1 when the variance is known)")
    sp.set_defaults(func=cmd_test)

    sp = sub.add_parser("path", help="lambda path with BIC values")
    _add_data_flags(sp, with_tuning=False)
    sp.set_defaults(func=cmd_path)

    sp = sub.add_parser("simulate", help="size/power/selection experiments")
    sp.add_argument("--example", choices=["1", "2"], required=True,
                    help="1 = linear, 2 = logistic")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--p", type=int, required=True)
    sp.add_argument("--delta", default="0",
                    help="comma list of local-alternative sizes")
    sp.add_argument("--reps", type=int, default=200)
    sp.add_argument("--seed", type=int, default=DEFAULT_SEED)
    sp.add_argument("--alpha", type=float, default=0.05)
    sp.add_argument("--methods", default="pplr,plr,olr")
    sp.add_argument("--n-lambdas", type=int, default=solver.N_LAMBDA)
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_simulate)

    sp = sub.add_parser("prostate", help="reproduce the prostate analysis")
    sp.add_argument("--a", type=float, default=None)
    sp.add_argument("--n-lambdas", type=int, default=solver.N_LAMBDA)
    sp.add_argument("--out", required=True)
    sp.add_argument("--format", choices=["csv", "json"], default="csv")
    sp.set_defaults(func=cmd_prostate)
    return ap


def main(argv=None) -> int:
    ap = build_parser()
    args = ap.parse_args(argv)
    try:
        return args.func(args)
    except ContractViolation as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except SolverError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
