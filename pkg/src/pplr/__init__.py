"""Partial penalized likelihood estimation and likelihood-ratio testing.

The library fits sparse generalized linear models in which a designated
subset of coefficients is exempt from the penalty, and tests hypotheses
about that subset with a likelihood-ratio statistic calibrated against
the (noncentral) chi-square distribution.  A Monte-Carlo harness and a
reproduction of the prostate-cancer case study are included.
"""

from .families import Dataset, Family, LikelihoodEval, evaluate, fisher_information, log_likelihood, neg_hessian, score
from .penalties import PenaltyKind, PenaltySpec, penalty_derivative, penalty_value, scalar_prox
from .solver import FitProblem, FitResult, bic_scale_factor, default_lambda_grid, fit, fit_path, select_bic
from .inference import (
    FisherBlocks,
    HypothesisSpec,
    TestReport,
    chi2_cdf,
    chi2_quantile,
    linear_transform,
    noncentral_chi2_cdf,
    noncentral_param,
    olr_test,
    plr_test,
    pplr_test,
)
from .simulate import Example, SimDesign, SimReport, generate, metrics, qq_data, run_study
from .dataio import StandardizeTransform, TableSpec, load_csv, load_prostate, prostate_analysis, standardize
from .exceptions import ContractViolation, SolverError

__version__ = "0.1.0"

__all__ = [
    "ContractViolation", "Dataset", "Example", "Family", "FisherBlocks",
    "FitProblem", "FitResult", "HypothesisSpec", "LikelihoodEval",
    "PenaltyKind", "PenaltySpec", "SimDesign", "SimReport", "SolverError",
    "StandardizeTransform", "TableSpec", "TestReport", "bic_scale_factor",
    "chi2_cdf", "chi2_quantile", "default_lambda_grid", "evaluate",
    "fisher_information", "fit", "fit_path", "generate", "linear_transform",
    "load_csv", "load_prostate", "log_likelihood", "metrics", "neg_hessian",
    "noncentral_chi2_cdf", "noncentral_param", "olr_test", "penalty_derivative",
    "penalty_value", "plr_test", "pplr_test", "prostate_analysis", "qq_data",
    "run_study", "scalar_prox", "score", "select_bic", "standardize",
]
