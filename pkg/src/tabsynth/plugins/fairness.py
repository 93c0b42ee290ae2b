"""Group balancing and cross-domain augmentation through conditional generation."""
from __future__ import annotations

import math

import numpy as np

from ..data import Categorical, Dataset, Integer, Metadata
from ..errors import CapabilityError, ConfigError, InfeasibleError, UnknownDomainError, UnknownFeatureError
from .base import Condition, GeneratorModel, concat_rows, fit, generate, get_plugin


def augmentation_counts(real_counts: dict, target: dict) -> dict:
    """Smallest synthetic additions per group so the union matches ``target`` shares.

    Groups missing from ``target`` have target share 0, which is infeasible
    whenever real rows of that group exist (rows are never removed).
    """
    shares = {g: float(target.get(g, 0.0)) for g in set(real_counts) | set(target)}
    if any(s < 0 for s in shares.values()):
        raise ConfigError("target proportions must be non-negative")
    need = 0.0
    for g, c in real_counts.items():
        if c == 0:
            continue
        if shares[g] == 0:
            raise InfeasibleError(f"group {g!r} has {c} real rows but target share 0; balancing would need removal")
        need = max(need, c / shares[g])
    total_share = sum(shares.values())
    if not math.isclose(total_share, 1.0, abs_tol=1e-9):
        raise ConfigError(f"target proportions sum to {total_share}, not 1")
    total = math.ceil(round(need, 9))
    return {g: max(0, int(round(shares[g] * total)) - real_counts.get(g, 0)) for g in sorted(shares)}


def balance_generate(model: GeneratorModel, dataset: Dataset, group_feature: str, target_proportions: dict,
                     seed: int = 0) -> Dataset:
    """Synthetic rows that, appended to ``dataset``, bring group shares to the target.

    Rows for group g are generated conditioned on ``group_feature = g``.
    Real rows are never removed; within one row per group after rounding.
    """
    if group_feature not in dataset.schema.columns:
        raise UnknownFeatureError(f"unknown group feature {group_feature!r}")
    if not get_plugin(model.plugin).descriptor.conditional:
        raise CapabilityError(f"plugin {model.plugin!r} cannot generate conditionally")
    col = dataset[group_feature]
    kind = dataset.schema.kind(group_feature)
    keys = [str(v) for v in col] if isinstance(kind, Categorical) else list(col)
    target = {(str(g) if isinstance(kind, Categorical) else int(g)): v for g, v in target_proportions.items()}
    real_counts = {}
    for k in keys:
        real_counts[k] = real_counts.get(k, 0) + 1
    extra = augmentation_counts(real_counts, target)
    parts = []
    for i, (g, n) in enumerate(sorted(extra.items(), key=lambda kv: str(kv[0]))):
        if n > 0:
            parts.append(generate(model, n, Condition({group_feature: g}), seed=seed + 7919 * i))
    if not parts:
        return dataset.take_rows(np.zeros(0, dtype=np.int64))
    return concat_rows(parts)


def domain_augment(dataset: Dataset, domain_feature: str, scarce_domain, count: int, seed: int = 0,
                   bins: int = 20, smoothing: float = 0.1) -> Dataset:
    """Rows for one data source generated from a network fit on all sources pooled.

    The domain label is forced to be the tree root, so structure and the
    tables of features unrelated to the domain are shared across sources.
    The scarce source's rows of a domain-dependent table see only its own
    records, so the per-cell smoothing is kept well below the plain
    network default.
    """
    if domain_feature not in dataset.schema.columns:
        raise UnknownFeatureError(f"unknown domain feature {domain_feature!r}")
    kind = dataset.schema.kind(domain_feature)
    if not isinstance(kind, (Categorical, Integer)):
        raise ConfigError("the domain label must be categorical or integer")
    value = str(scarce_domain) if isinstance(kind, Categorical) else scarce_domain
    present = set(dataset[domain_feature].tolist())
    if value not in present:
        raise UnknownDomainError(f"domain {scarce_domain!r} not among {sorted(map(str, present))}")
    model = fit("bayes_net", dataset, Metadata(group_feature=domain_feature),
                {"bins": bins, "smoothing": smoothing, "root": domain_feature}, seed=seed)
    return generate(model, count, Condition({domain_feature: value}), seed=seed)
