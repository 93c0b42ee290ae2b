"""Metric reports: named values with a direction annotation, provenance and notices."""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError, UnknownMetricError

HIGHER = "higher"
LOWER = "lower"
TARGET = "target"

_DEFAULT_ALPHAS = tuple(round(0.1 * i, 1) for i in range(1, 10))
TASK_KINDS = ("classification", "regression", "survival", "series-forecast")


@dataclass(frozen=True)
class Direction:
    kind: str
    target: float | None = None

    def __post_init__(self):
        if self.kind not in (HIGHER, LOWER, TARGET):
            raise ConfigError(f"unknown direction {self.kind!r}")
        if (self.kind == TARGET) != (self.target is not None):
            raise ConfigError("a target value is required exactly for target directions")

    def badness(self, value: float) -> float:
        """Sort key: smaller is better."""
        if self.kind == HIGHER:
            return -value
        if self.kind == LOWER:
            return value
        return abs(value - self.target)

    def __str__(self):
        return f"target({self.target:g})" if self.kind == TARGET else f"{self.kind}-better"

    @classmethod
    def parse(cls, text: str) -> Direction:
        if text.startswith("target(") and text.endswith(")"):
            return cls(TARGET, float(text[7:-1]))
        return cls(text.removesuffix("-better"))


UP, DOWN, HALF, ONE = Direction(HIGHER), Direction(LOWER), Direction(TARGET, 0.5), Direction(TARGET, 1.0)

# direction of every metric the suites can emit
DIRECTIONS: dict[str, Direction] = {
    "js_distance": DOWN,
    "wasserstein1": DOWN,
    "kl_divergence": DOWN,
    "ks_statistic": DOWN,
    "mmd": DOWN,
    "prdc_precision": UP,
    "prdc_recall": UP,
    "prdc_density": ONE,
    "prdc_coverage": UP,
    "alpha_precision_delta": DOWN,
    "km_distance": DOWN,
    "detection_auc_linear": HALF,
    "detection_auc_gmm": HALF,
    "tstr_auc": UP,
    "tstr_auc_baseline": UP,
    "tstr_rmse": DOWN,
    "tstr_rmse_baseline": DOWN,
    "tstr_concordance": UP,
    "tstr_concordance_baseline": UP,
    "tstr_forecast_rmse": DOWN,
    "tstr_forecast_rmse_baseline": DOWN,
    "k_anonymity": UP,
    "l_diversity": UP,
    "k_map": UP,
    "delta_presence": DOWN,
    "identifiability": DOWN,
    "correct_attribution_probability": DOWN,
    "nn_reid": DOWN,
    "nn_reid_baseline": DOWN,
}

FIDELITY_METRICS = ("js_distance", "wasserstein1", "kl_divergence", "ks_statistic", "mmd", "prdc_precision",
                    "prdc_recall", "prdc_density", "prdc_coverage", "alpha_precision_delta", "km_distance",
                    "detection_auc_linear", "detection_auc_gmm")
PRIVACY_METRICS = ("k_anonymity", "l_diversity", "k_map", "delta_presence", "identifiability",
                   "correct_attribution_probability", "nn_reid", "nn_reid_baseline")
UTILITY_METRICS = tuple(n for n in DIRECTIONS if n.startswith("tstr_"))


def direction_of(name: str) -> Direction:
    try:
        return DIRECTIONS[name]
    except KeyError:
        raise UnknownMetricError(f"unknown metric {name!r}") from None


@dataclass(frozen=True)
class TaskSpec:
    outcome: str
    kind: str
    order: int = 1

    def __post_init__(self):
        if self.kind not in TASK_KINDS:
            raise ConfigError(f"task kind must be one of {TASK_KINDS}, got {self.kind!r}")


@dataclass(frozen=True)
class EvalConfig:
    metrics: tuple | None = None  # None selects every applicable metric
    quasi_identifiers: tuple = ()
    sensitive: tuple = ()
    task: TaskSpec | None = None
    k: int = 5
    alpha_grid: tuple = _DEFAULT_ALPHAS
    folds: int = 5
    bins: int = 10
    seed: int = 0

    def __post_init__(self):
        if self.k < 1:
            raise ConfigError("k must be at least 1")
        if not all(0 < a < 1 for a in self.alpha_grid) or not self.alpha_grid:
            raise ConfigError("alpha grid values must lie in (0, 1)")
        if self.folds < 2:
            raise ConfigError("detection needs at least 2 folds")
        if self.bins < 1:
            raise ConfigError("bins must be positive")
        if self.metrics is not None:
            for m in self.metrics:
                direction_of(m)
            object.__setattr__(self, "metrics", tuple(self.metrics))

    def wants(self, name: str) -> bool:
        return self.metrics is None or name in self.metrics

    def to_dict(self) -> dict:
        return {"metrics": None if self.metrics is None else list(self.metrics),
                "quasi_identifiers": list(self.quasi_identifiers), "sensitive": list(self.sensitive),
                "task": None if self.task is None else {"outcome": self.task.outcome, "kind": self.task.kind,
                                                         "order": self.task.order},
                "k": self.k, "alpha_grid": list(self.alpha_grid), "folds": self.folds, "bins": self.bins,
                "seed": self.seed}

    @classmethod
    def from_dict(cls, d: dict) -> EvalConfig:
        known = {"metrics", "quasi_identifiers", "sensitive", "task", "k", "alpha_grid", "folds", "bins", "seed"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown evaluation keys {sorted(extra)}")
        d = dict(d)
        if d.get("task") is not None:
            d["task"] = TaskSpec(**d["task"])
        for key in ("quasi_identifiers", "sensitive", "alpha_grid"):
            if key in d:
                d[key] = tuple(d[key])
        if d.get("metrics") is not None:
            d["metrics"] = tuple(d["metrics"])
        return cls(**d)

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.to_dict(), sort_keys=True).encode()).hexdigest()[:16]


@dataclass(frozen=True)
class MetricEntry:
    name: str
    value: float
    direction: Direction


@dataclass
class MetricReport:
    entries: list = field(default_factory=list)
    provenance: dict = field(default_factory=dict)
    notices: list = field(default_factory=list)

    def add(self, name: str, value: float, direction: Direction | None = None) -> None:
        if name in self:
            raise DataError(f"metric {name!r} reported twice")
        value = float(value)
        if not math.isfinite(value):
            raise DataError(f"metric {name!r} is not finite: {value}")
        self.entries.append(MetricEntry(name, value, direction or direction_of(name)))

    def notice(self, message: str) -> None:
        self.notices.append(message)

    def extend(self, other: MetricReport) -> None:
        for e in other.entries:
            self.add(e.name, e.value, e.direction)
        self.notices.extend(other.notices)

    def __contains__(self, name: str) -> bool:
        return any(e.name == name for e in self.entries)

    def __getitem__(self, name: str) -> float:
        for e in self.entries:
            if e.name == name:
                return e.value
        raise UnknownMetricError(f"metric {name!r} not in report")

    def names(self) -> list[str]:
        return [e.name for e in self.entries]

    def as_dict(self) -> dict[str, float]:
        return {e.name: e.value for e in self.entries}

    def to_dict(self) -> dict:
        return {"metrics": [{"name": e.name, "value": e.value, "direction": str(e.direction)}
                            for e in sorted(self.entries, key=lambda e: e.name)],
                "provenance": self.provenance, "notices": list(self.notices)}

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True, indent=2, default=_json_default)

    def to_text(self) -> str:
        rows = sorted(self.entries, key=lambda e: e.name)
        width = max([len(e.name) for e in rows] + [6])
        lines = [f"{'metric':<{width}}  {'value':>14}  direction"]
        lines += [f"{e.name:<{width}}  {e.value:>14.6g}  {e.direction}" for e in rows]
        lines += [f"note: {n}" for n in self.notices]
        return "\n".join(lines)


def _json_default(obj):
    if isinstance(obj, np.generic):
        return obj.item()
    raise TypeError(f"cannot serialize {type(obj).__name__}")
