"""Seeded numerical primitives shared by generators and metrics."""
from .divergences import (
    Divergences,
    Histogram,
    MmdResult,
    empirical_w1,
    entropy_bits,
    f_divergences,
    ks_statistic,
    median_heuristic,
    mmd_rbf,
    mutual_information,
    mutual_information_codes,
)
from .dp import exponential_mechanism, exponential_weights, laplace_sample
from .glm import GlmModel, fit_glm, glm_objective
from .rng import RngStream, as_generator
from .survival import (
    CoxModel,
    StepFunction,
    concordance,
    concordance_index,
    cox_objective,
    fit_cox,
    kaplan_meier,
    km_distance,
)

__all__ = [
    "CoxModel", "Divergences", "GlmModel", "Histogram", "MmdResult", "RngStream", "StepFunction",
    "as_generator", "concordance", "concordance_index", "cox_objective", "empirical_w1", "entropy_bits",
    "exponential_mechanism", "exponential_weights", "f_divergences", "fit_cox", "fit_glm", "glm_objective",
    "kaplan_meier", "km_distance", "ks_statistic", "laplace_sample", "median_heuristic", "mmd_rbf",
    "mutual_information", "mutual_information_codes",
]
