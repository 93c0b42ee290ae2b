"""Plugin x dataset x repeat grids: split, fit, generate, evaluate, aggregate, rank."""
from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .data import (
    CompositeDataset,
    Dataset,
    Metadata,
    load_composite,
    load_dataset,
    load_layout,
    load_metadata,
    load_schema,
    split,
)
from .errors import ConfigError, UnknownMetricError
from .metrics import Direction, EvalConfig, TaskSpec, evaluate
from .plugins import fit, generate, get_plugin, modality


@dataclass
class DatasetSpec:
    name: str
    data: Dataset | CompositeDataset
    metadata: Metadata = field(default_factory=Metadata)
    task: TaskSpec | None = None
    source: dict = field(default_factory=dict)  # paths as written in the config, for hashing


@dataclass(frozen=True)
class PluginSpec:
    name: str
    config: dict = field(default_factory=dict)

    @property
    def label(self) -> str:
        return self.name if not self.config else f"{self.name}{json.dumps(self.config, sort_keys=True)}"


@dataclass
class BenchmarkConfig:
    datasets: list
    plugins: list
    evaluation: EvalConfig = field(default_factory=EvalConfig)
    repeats: int = 1
    seed: int = 0
    split: float = 0.5
    generation: str | int = "match-real"  # or a fixed count
    workers: int = 1

    def __post_init__(self):
        if not isinstance(self.repeats, int) or self.repeats < 1:
            raise ConfigError("repeats must be a positive integer")
        if not self.datasets or not self.plugins:
            raise ConfigError("a benchmark needs at least one dataset and one plugin")
        if not 0 < self.split < 1:
            raise ConfigError("split fraction must lie in (0, 1)")
        if self.generation != "match-real" and not (isinstance(self.generation, int) and self.generation > 0):
            raise ConfigError("generation must be 'match-real' or a positive count")
        if self.workers < 1:
            raise ConfigError("workers must be positive")
        names = [d.name for d in self.datasets]
        if len(set(names)) != len(names):
            raise ConfigError("dataset names must be unique")
        labels = [p.label for p in self.plugins]
        if len(set(labels)) != len(labels):
            raise ConfigError("plugin entries must be unique")
        for p in self.plugins:
            get_plugin(p.name).check_config(dict(p.config))

    def describe(self) -> dict:
        return {"datasets": [{"name": d.name, **d.source} for d in self.datasets],
                "plugins": [{"name": p.name, "config": p.config} for p in self.plugins],
                "evaluation": self.evaluation.to_dict(), "repeats": self.repeats, "seed": self.seed,
                "split": self.split, "generation": self.generation}

    def digest(self) -> str:
        return hashlib.sha256(json.dumps(self.describe(), sort_keys=True).encode()).hexdigest()[:16]

    @classmethod
    def from_dict(cls, d: dict, base: Path | str = ".") -> BenchmarkConfig:
        known = {"datasets", "plugins", "evaluation", "repeats", "seed", "split", "generation", "workers"}
        extra = set(d) - known
        if extra:
            raise ConfigError(f"unknown benchmark keys {sorted(extra)}")
        base = Path(base)
        datasets = [_load_dataset_entry(e, base) for e in d.get("datasets", [])]
        plugins = []
        for p in d.get("plugins", []):
            if isinstance(p, str):
                p = {"name": p}
            plugins.append(PluginSpec(p["name"], dict(p.get("config", {}))))
        generation = d.get("generation", "match-real")
        if isinstance(generation, dict):
            generation = int(generation["fixed"])
        return cls(datasets, plugins, EvalConfig.from_dict(d.get("evaluation", {})), d.get("repeats", 1),
                   d.get("seed", 0), d.get("split", 0.5), generation, d.get("workers", 1))

    @classmethod
    def from_file(cls, path) -> BenchmarkConfig:
        path = Path(path)
        with open(path) as fh:
            return cls.from_dict(json.load(fh), path.parent)


def _load_dataset_entry(e: dict, base: Path) -> DatasetSpec:
    known = {"name", "data", "schema", "metadata", "layout", "composite", "task"}
    extra = set(e) - known
    if extra:
        raise ConfigError(f"unknown dataset keys {sorted(extra)}")
    source = {k: e[k] for k in sorted(e) if k != "name"}
    task = TaskSpec(**e["task"]) if e.get("task") else None
    metadata = load_metadata(base / e["metadata"]) if e.get("metadata") else Metadata()
    if "composite" in e:
        return DatasetSpec(e["name"], load_composite(base / e["composite"]), metadata, task, source)
    schema = load_schema(base / e["schema"])
    layout = load_layout(base / e["layout"]) if e.get("layout") else None
    return DatasetSpec(e["name"], load_dataset(base / e["data"], schema, layout), metadata, task, source)


def derive_seeds(master: int, repeats: int) -> list[int]:
    """Distinct per-repeat seeds spawned from the master seed."""
    children = np.random.SeedSequence(master).spawn(repeats)
    return [int(c.generate_state(1)[0]) for c in children]


def split_any(data, fraction: float, seed: int):
    """Train/evaluation split; composites split by static record with their series following."""
    if not isinstance(data, CompositeDataset):
        return split(data, fraction, seed)
    static_name = data.static_name
    static = data.parts[static_name]
    positional = static.ids is None
    if positional:  # unlinked parts align by row position; tag rows so the halves can be matched up
        tags = [str(i) for i in range(static.n_rows)]
        parts = {n: d.replace(ids=tags) for n, d in data.parts.items()}
    else:
        parts = dict(data.parts)
    a, b = split(parts[static_name], fraction, seed)
    out = []
    for half in (a, b):
        keys = set(half.ids)
        chosen = {static_name: half}
        for name, part in parts.items():
            if name == static_name:
                continue
            if part.schema.pattern.is_series:
                chosen[name] = part.take([i for i, k in enumerate(part.series_keys()) if k in keys])
            else:
                chosen[name] = part.take_rows([i for i, k in enumerate(part.ids) if k in keys])
        if positional:
            chosen = {n: Dataset(d.schema, d.columns) for n, d in chosen.items()}
        out.append(CompositeDataset(chosen, data.linkage))
    return tuple(out)


@dataclass(frozen=True)
class Cell:
    dataset: str
    plugin: str
    repeat: int
    seed: int
    status: str  # ok | skipped | failed
    message: str = ""
    metrics: dict = field(default_factory=dict)
    directions: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {"dataset": self.dataset, "plugin": self.plugin, "repeat": self.repeat, "seed": self.seed,
                "status": self.status, "message": self.message, "metrics": dict(sorted(self.metrics.items()))}


def _size(data) -> int:
    if isinstance(data, CompositeDataset):
        return data.parts[data.static_name].n_rows
    return len(data)


def run_cell(spec: DatasetSpec, plugin: PluginSpec, repeat: int, seed: int, config: BenchmarkConfig) -> Cell:
    p = get_plugin(plugin.name)
    mod = modality(spec.data)
    if mod not in p.descriptor.patterns:
        return Cell(spec.name, plugin.label, repeat, seed, "skipped",
                    f"{plugin.name} does not support {mod} data")
    try:
        train, held_out = split_any(spec.data, config.split, seed)
        model = fit(plugin.name, train, spec.metadata if not isinstance(train, CompositeDataset) else None,
                    plugin.config, seed=seed)
        count = _size(train) if config.generation == "match-real" else int(config.generation)
        synth = generate(model, count, seed=seed + 1)
        ev = config.evaluation
        ev = EvalConfig(ev.metrics, ev.quasi_identifiers, ev.sensitive, spec.task or ev.task, ev.k, ev.alpha_grid,
                        ev.folds, ev.bins, seed)
        report = evaluate(held_out, synth, ev, spec.metadata, real_train=train)
    except Exception as exc:  # a failing cell must not abort the grid
        return Cell(spec.name, plugin.label, repeat, seed, "failed", f"{type(exc).__name__}: {exc}")
    return Cell(spec.name, plugin.label, repeat, seed, "ok", "; ".join(report.notices), report.as_dict(),
                {e.name: str(e.direction) for e in report.entries})


@dataclass
class BenchmarkReport:
    cells: list
    provenance: dict
    timestamp: str = ""

    def ok_cells(self):
        return [c for c in self.cells if c.status == "ok"]

    def summary(self) -> list[dict]:
        groups: dict[tuple, list] = {}
        directions = {}
        for c in self.ok_cells():
            for m, v in c.metrics.items():
                groups.setdefault((c.dataset, c.plugin, m), []).append(v)
                directions[m] = c.directions[m]
        out = []
        for (d, p, m), vals in sorted(groups.items()):
            arr = np.asarray(vals, dtype=np.float64)
            out.append({"dataset": d, "plugin": p, "metric": m, "mean": float(arr.mean()),
                        "std": float(arr.std(ddof=0)) if arr.size > 1 else 0.0, "n": int(arr.size),
                        "direction": directions[m]})
        return out

    def rankings(self) -> list[dict]:
        pairs = sorted({(s["dataset"], s["metric"]) for s in self.summary()})
        return [{"dataset": d, "metric": m, "ranking": rank_plugins(self, m, d)} for d, m in pairs]

    def to_dict(self, with_timestamp: bool = False) -> dict:
        out = {"provenance": self.provenance, "cells": [c.to_dict() for c in self.cells],
               "summary": self.summary(), "rankings": self.rankings()}
        if with_timestamp:
            out["timestamp"] = self.timestamp
        return out

    def canonical_json(self) -> str:
        """Key-sorted JSON without the timestamp; identical configs give identical bytes."""
        return json.dumps(self.to_dict(), sort_keys=True, indent=2)

    def to_json(self) -> str:
        return json.dumps(self.to_dict(with_timestamp=True), sort_keys=True, indent=2)

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", "plugin", "repeat", "seed", "status", "metric", "value", "message"])
        for c in self.cells:
            if c.metrics:
                for m, v in sorted(c.metrics.items()):
                    w.writerow([c.dataset, c.plugin, c.repeat, c.seed, c.status, m, repr(v), ""])
            else:
                w.writerow([c.dataset, c.plugin, c.repeat, c.seed, c.status, "", "", c.message])
        return buf.getvalue()

    def to_text(self) -> str:
        rows = self.summary()
        lines = []
        if rows:
            wd = max(len(r["dataset"]) for r in rows)
            wp = max(len(r["plugin"]) for r in rows)
            wm = max(len(r["metric"]) for r in rows)
            lines.append(f"{'dataset':<{wd}}  {'plugin':<{wp}}  {'metric':<{wm}}  {'mean':>12}  {'std':>10}")
            lines += [f"{r['dataset']:<{wd}}  {r['plugin']:<{wp}}  {r['metric']:<{wm}}  {r['mean']:>12.6g}  "
                      f"{r['std']:>10.4g}" for r in rows]
        for c in self.cells:
            if c.status != "ok":
                lines.append(f"{c.status}: {c.dataset} / {c.plugin} / repeat {c.repeat}: {c.message}")
        return "\n".join(lines)

    def write(self, directory) -> tuple[Path, Path]:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        jp, cp = directory / "report.json", directory / "report.csv"
        jp.write_text(self.to_json() + "\n")
        cp.write_text(self.to_csv())
        return jp, cp


def run_benchmark(config: BenchmarkConfig, workers: int | None = None) -> BenchmarkReport:
    """Evaluate every (dataset, plugin, repeat) cell; failures and skips are recorded, not raised."""
    seeds = derive_seeds(config.seed, config.repeats)
    jobs = [(d, p, r, seeds[r]) for d in config.datasets for p in config.plugins for r in range(config.repeats)]
    n_workers = workers or config.workers
    if n_workers > 1:
        with ThreadPoolExecutor(n_workers) as pool:
            cells = list(pool.map(lambda j: run_cell(*j, config), jobs))
    else:
        cells = [run_cell(*j, config) for j in jobs]
    cells.sort(key=lambda c: (c.dataset, c.plugin, c.repeat))
    provenance = {"config_hash": config.digest(), "seeds": seeds, "tool_version": __version__,
                  "master_seed": config.seed}
    stamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    return BenchmarkReport(cells, provenance, stamp)


def rank_plugins(report: BenchmarkReport, metric: str, dataset: str) -> list[str]:
    """Plugins ordered best-first by mean value under the metric's direction; ties by name."""
    rows = [s for s in report.summary() if s["metric"] == metric and s["dataset"] == dataset]
    if not rows:
        raise UnknownMetricError(f"metric {metric!r} has no values for dataset {dataset!r}")
    direction = Direction.parse(rows[0]["direction"])
    rows.sort(key=lambda s: (direction.badness(s["mean"]), s["plugin"]))
    return [s["plugin"] for s in rows]


__all__ = ["BenchmarkConfig", "BenchmarkReport", "Cell", "DatasetSpec", "PluginSpec", "derive_seeds",
           "rank_plugins", "run_benchmark", "run_cell", "split_any"]
