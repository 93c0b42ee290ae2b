"""Train-on-synthetic, test-on-real utility with a real-trained baseline."""
from __future__ import annotations

from typing import NamedTuple

import numpy as np

from ..data import Categorical, Continuous, Dataset, EncodingMap
from ..errors import SizeError, TaskMismatchError
from ..numeric import concordance, fit_cox, fit_glm
from .fidelity import auc_score, check_pair
from .report import Direction, MetricReport, TaskSpec, direction_of


class UtilityResult(NamedTuple):
    metric: str
    synthetic_score: float
    real_baseline_score: float


def _check_task(schema, task: TaskSpec) -> None:
    pair = schema.censored
    if task.kind == "survival":
        if pair is None:
            raise TaskMismatchError("survival utility needs a censored (time, event) pair")
        if task.outcome not in (pair.name, pair.kind.time):
            raise TaskMismatchError(f"survival outcome must be the censored pair, got {task.outcome!r}")
        return
    if task.outcome not in schema.columns:
        raise TaskMismatchError(f"outcome {task.outcome!r} is not a column")
    kind = schema.kind(task.outcome)
    if task.kind == "series-forecast":
        if not schema.pattern.is_series:
            raise TaskMismatchError("series forecasting needs series data")
        if isinstance(kind, Categorical):
            raise TaskMismatchError("series forecasting needs a numeric outcome")
    elif schema.pattern.is_series:
        raise TaskMismatchError(f"{task.kind} utility needs static data")
    elif task.kind == "classification" and isinstance(kind, Continuous):
        raise TaskMismatchError("classification needs a categorical or integer outcome")
    elif task.kind == "regression" and isinstance(kind, Categorical):
        raise TaskMismatchError("regression needs a numeric outcome")


def _features(schema, task: TaskSpec) -> EncodingMap:
    drop = {task.outcome}
    if schema.censored is not None and task.kind == "survival":
        drop |= {schema.censored.kind.time, schema.censored.kind.event}
    return EncodingMap.from_schema(schema, [c for c in schema.columns if c not in drop])


def _class_labels(schema, name: str, train: Dataset, test: Dataset) -> list:
    kind = schema.kind(name)
    if isinstance(kind, Categorical):
        return list(kind.categories)
    return sorted(set(np.asarray(train[name]).tolist()) | set(np.asarray(test[name]).tolist()))


def _classification(train: Dataset, test: Dataset, enc: EncodingMap, outcome: str) -> float:
    """AUC of a logistic model; one-vs-rest macro average when more than two classes occur in test."""
    labels = _class_labels(train.schema, outcome, train, test)
    X, Xt = enc.transform(train), enc.transform(test)
    y, yt = np.asarray(train[outcome]), np.asarray(test[outcome])
    present = [c for c in labels if np.any(yt == c)]
    if len(present) < 2:
        raise SizeError("the evaluation split holds a single outcome class")
    positives = present[-1:] if len(present) == 2 else present
    aucs = []
    for c in positives:
        target = (y == c).astype(np.float64)
        if target.min() == target.max():
            scores = np.zeros(len(yt))  # a one-class training set carries no signal
        else:
            scores = fit_glm(X, target, "logistic").decision(Xt)
        aucs.append(auc_score(yt == c, scores))
    return float(np.mean(aucs))


def _regression(train: Dataset, test: Dataset, enc: EncodingMap, outcome: str) -> float:
    model = fit_glm(enc.transform(train), np.asarray(train[outcome], dtype=np.float64), "linear")
    err = model.predict(enc.transform(test)) - np.asarray(test[outcome], dtype=np.float64)
    return float(np.sqrt(np.mean(err ** 2)))


def _survival(train: Dataset, test: Dataset, enc: EncodingMap) -> float:
    pair = train.schema.censored.kind
    model = fit_cox(enc.transform(train), train[pair.time], train[pair.event])
    return concordance(model, enc.transform(test), test[pair.time], test[pair.event])


def lag_design(ds: Dataset, outcome: str, order: int) -> tuple[np.ndarray, np.ndarray]:
    """Pooled (lags, next value) pairs for one numeric series feature."""
    y = np.asarray(ds[outcome], dtype=np.float64)
    rows = [np.arange(a + order, b) for a, b in ds.series_bounds() if b - a > order]
    rows = np.concatenate(rows) if rows else np.zeros(0, dtype=np.int64)
    X = np.column_stack([y[rows - k] for k in range(1, order + 1)]) if rows.size else np.zeros((0, order))
    return X, y[rows]


def _forecast(train: Dataset, test: Dataset, outcome: str, order: int) -> float:
    X, y = lag_design(train, outcome, order)
    Xt, yt = lag_design(test, outcome, order)
    if y.size < 2 or yt.size == 0:
        raise SizeError(f"series too short for lag-{order} forecasting")
    model = fit_glm(X, y, "linear")
    return float(np.sqrt(np.mean((model.predict(Xt) - yt) ** 2)))


_METRIC = {"classification": "tstr_auc", "regression": "tstr_rmse", "survival": "tstr_concordance",
           "series-forecast": "tstr_forecast_rmse"}


def task_score(train: Dataset, test: Dataset, task: TaskSpec) -> float:
    """Score of the task's linear model trained on ``train`` and evaluated on ``test``."""
    _check_task(train.schema, task)
    if task.kind == "series-forecast":
        return _forecast(train, test, task.outcome, task.order)
    enc = _features(train.schema, task)
    if task.kind == "classification":
        return _classification(train, test, enc, task.outcome)
    if task.kind == "regression":
        return _regression(train, test, enc, task.outcome)
    return _survival(train, test, enc)


def utility_tstr(real_train: Dataset, real_test: Dataset, synth: Dataset, task: TaskSpec,
                 model_kind: str = "linear", seed: int = 0) -> UtilityResult:
    """Train on ``synth`` and on ``real_train``; evaluate both on ``real_test``.

    The fitted models are deterministic, so ``seed`` only labels the run.
    """
    if model_kind != "linear":
        raise TaskMismatchError(f"only linear utility models are provided, not {model_kind!r}")
    check_pair(real_train, synth)
    check_pair(real_train, real_test)
    return UtilityResult(_METRIC[task.kind], task_score(synth, real_test, task),
                         task_score(real_train, real_test, task))


def utility_report(real_train: Dataset, real_test: Dataset, synth: Dataset, task: TaskSpec,
                   seed: int = 0) -> MetricReport:
    res = utility_tstr(real_train, real_test, synth, task, seed=seed)
    report = MetricReport(provenance={"seed": seed, "task": task.kind, "outcome": task.outcome})
    direction: Direction = direction_of(res.metric)
    report.add(res.metric, res.synthetic_score, direction)
    report.add(f"{res.metric}_baseline", res.real_baseline_score, direction)
    return report


__all__ = ["UtilityResult", "lag_design", "task_score", "utility_report", "utility_tstr"]
