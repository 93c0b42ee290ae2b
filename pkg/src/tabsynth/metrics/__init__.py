"""Fidelity, utility and privacy evaluation of a (real, synthetic) pair."""
from __future__ import annotations

from ..data import CompositeDataset, Dataset, Metadata
from ..errors import SchemaMismatchError
from .fidelity import (
    alpha_precision,
    auc_score,
    detection_auc,
    fidelity_suite,
    marginal_divergences,
    mean_ks,
    mean_w1,
    prdc,
)
from .privacy import (
    correct_attribution_probability,
    delta_presence,
    entropy_weights,
    identifiability,
    k_anonymity,
    k_map,
    l_diversity,
    nn_reidentification,
    privacy_suite,
    qi_keys,
)
from .report import (
    DIRECTIONS,
    FIDELITY_METRICS,
    PRIVACY_METRICS,
    UTILITY_METRICS,
    Direction,
    EvalConfig,
    MetricEntry,
    MetricReport,
    TaskSpec,
    direction_of,
)
from .utility import UtilityResult, task_score, utility_report, utility_tstr


def _evaluate_one(real: Dataset, synth: Dataset, config: EvalConfig, metadata: Metadata | None,
                  real_train: Dataset | None) -> MetricReport:
    report = MetricReport(provenance={"seed": config.seed, "config": config.digest()})
    if config.metrics is None or any(m in FIDELITY_METRICS for m in config.metrics):
        report.extend(fidelity_suite(real, synth, config))
    if config.metrics is None or any(m in PRIVACY_METRICS for m in config.metrics):
        report.extend(privacy_suite(real, synth, metadata, config))
    if config.task is not None:
        if real_train is None:
            report.notice("utility skipped: no real training split supplied")
        else:
            utility = utility_report(real_train, real, synth, config.task, config.seed)
            for e in utility.entries:
                if config.wants(e.name):
                    report.add(e.name, e.value, e.direction)
    return report


def evaluate(real, synth, config: EvalConfig | None = None, metadata: Metadata | None = None,
             real_train=None) -> MetricReport:
    """Run the selected suites. ``real`` is the evaluation split; ``real_train`` enables utility.

    Composite inputs are evaluated part by part with metric names
    prefixed by the part name.
    """
    config = config or EvalConfig()
    if not isinstance(real, CompositeDataset):
        return _evaluate_one(real, synth, config, metadata, real_train)
    if set(real.parts) != set(synth.parts):
        raise SchemaMismatchError("composite parts differ between real and synthetic data")
    report = MetricReport(provenance={"seed": config.seed, "config": config.digest()})
    part_config = EvalConfig(config.metrics, (), (), None, config.k, config.alpha_grid, config.folds,
                             config.bins, config.seed)
    for name in sorted(real.parts):
        sub = _evaluate_one(real.parts[name], synth.parts[name], part_config, None, None)
        for e in sub.entries:
            report.add(f"{name}.{e.name}", e.value, e.direction)
        report.notices.extend(f"{name}: {n}" for n in sub.notices)
    return report


__all__ = [
    "DIRECTIONS", "FIDELITY_METRICS", "PRIVACY_METRICS", "UTILITY_METRICS", "Direction", "EvalConfig",
    "MetricEntry", "MetricReport", "TaskSpec", "UtilityResult", "alpha_precision", "auc_score",
    "correct_attribution_probability", "delta_presence", "detection_auc", "direction_of", "entropy_weights",
    "evaluate", "fidelity_suite", "identifiability", "k_anonymity", "k_map", "l_diversity",
    "marginal_divergences", "mean_ks", "mean_w1", "nn_reidentification", "prdc", "privacy_suite", "qi_keys",
    "task_score", "utility_report", "utility_tstr",
]
