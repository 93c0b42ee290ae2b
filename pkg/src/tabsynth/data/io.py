"""CSV data files and JSON schema/metadata/layout documents."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from ..errors import (
    DomainError,
    LinkageError,
    MissingValueError,
    ParseError,
    SchemaError,
    SeriesOrderError,
)
from .dataset import CompositeDataset, Dataset
from .schema import Categorical, Continuous, Integer, Metadata, Pattern, Schema


@dataclass(frozen=True)
class Layout:
    """Maps file columns onto schema features.

    ``columns`` renames features (feature -> file column); unspecified
    features are read from a column of the same name. ``series_id`` and
    ``time`` are required for series patterns; ``record_id`` optionally
    names a record key for static parts of composite data.
    """

    columns: dict = field(default_factory=dict)
    series_id: str | None = None
    time: str | None = None
    record_id: str | None = None
    sort_by_time: bool = True

    _KEYS = ("columns", "series_id", "time", "record_id", "sort_by_time")

    def source(self, feature: str) -> str:
        return self.columns.get(feature, feature)

    def id_column(self) -> str | None:
        return self.series_id or self.record_id

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self._KEYS}

    @classmethod
    def from_dict(cls, d: dict) -> Layout:
        extra = set(d) - set(cls._KEYS)
        if extra:
            raise SchemaError(f"unknown layout keys: {sorted(extra)}")
        return cls(dict(d.get("columns", {})), d.get("series_id"), d.get("time"),
                   d.get("record_id"), bool(d.get("sort_by_time", True)))


def default_layout(schema: Schema) -> Layout:
    if schema.pattern.is_series:
        return Layout(series_id="series_id", time="time")
    return Layout()


def _read_json(path) -> dict:
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc})") from exc


def load_schema(path) -> Schema:
    return Schema.from_dict(_read_json(path))


def load_metadata(path) -> Metadata:
    return Metadata.from_dict(_read_json(path))


def load_layout(path) -> Layout:
    return Layout.from_dict(_read_json(path))


def save_json(obj: dict, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _parse_float(raw: str, where: str) -> float:
    try:
        value = float(raw)
    except ValueError as exc:
        raise ParseError(f"{where}: cannot parse {raw!r} as a real number") from exc
    if math.isnan(value):
        raise MissingValueError(f"{where}: NaN is treated as a missing value")
    return value


def _parse_int(raw: str, where: str) -> int:
    try:
        return int(raw)
    except ValueError:
        pass
    value = _parse_float(raw, where)
    if not value.is_integer():
        raise ParseError(f"{where}: {raw!r} is not an integer")
    return int(value)


def _parse_time(raw: str, where: str, pattern: Pattern):
    if pattern is Pattern.REGULAR:
        return _parse_int(raw, where)
    try:
        return float(raw)
    except ValueError:
        pass
    try:
        stamp = pd.Timestamp(raw)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"{where}: cannot parse timestamp {raw!r}") from exc
    if stamp.tzinfo is None:
        stamp = stamp.tz_localize("UTC")
    return stamp.timestamp()


def load_dataset(path, schema: Schema, layout: Layout | None = None) -> Dataset:
    """Read a CSV file into a validated :class:`Dataset`.

    Raises on the first problem found: malformed values, values outside their
    declared domain, empty cells, or non-increasing series timestamps.
    """
    layout = layout or default_layout(schema)
    path = Path(path)
    with path.open(newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        rows = list(reader)

    index = {name: i for i, name in enumerate(header)}
    needed = {f: layout.source(f) for f in schema.columns}
    id_col = layout.id_column()
    if schema.pattern.is_series:
        if layout.series_id is None or layout.time is None:
            raise SchemaError("series layouts must name the series-id and time columns")
    extra_cols = [c for c in (id_col, layout.time if schema.pattern.is_series else None) if c]
    for col in list(needed.values()) + extra_cols:
        if col not in index:
            raise ParseError(f"{path}: column {col!r} not found in header")

    values = {f: [] for f in schema.columns}
    ids, times = [], []
    for lineno, row in enumerate(rows, start=2):
        if not row:
            continue
        if len(row) != len(header):
            raise ParseError(f"{path}:{lineno}: expected {len(header)} fields, got {len(row)}")
        for feat, col in needed.items():
            raw = row[index[col]].strip()
            where = f"{path}:{lineno} column {col!r}"
            if raw == "":
                raise MissingValueError(f"{where}: empty cell (impute missing values before loading)")
            kind = schema.kind(feat)
            if isinstance(kind, Continuous):
                v = _parse_float(raw, where)
            elif isinstance(kind, Integer):
                v = _parse_int(raw, where)
            else:
                v = raw
            if not kind.contains(v):
                raise DomainError(f"{where}: value {raw!r} outside the declared domain")
            values[feat].append(v)
        if id_col:
            raw = row[index[id_col]].strip()
            if raw == "":
                raise MissingValueError(f"{path}:{lineno}: empty id")
            ids.append(raw)
        if schema.pattern.is_series:
            raw = row[index[layout.time]].strip()
            if raw == "":
                raise MissingValueError(f"{path}:{lineno}: empty timestamp")
            times.append(_parse_time(raw, f"{path}:{lineno}", schema.pattern))

    if schema.pattern.is_series:
        ids_arr = np.array(ids, dtype=object)
        times_arr = np.array(times, dtype=np.int64 if schema.pattern is Pattern.REGULAR else np.float64)
        if layout.sort_by_time and len(ids):
            # group by first appearance, then order by time within each series
            _, first, inv = np.unique(ids_arr, return_index=True, return_inverse=True)
            rank = np.argsort(np.argsort(first))[inv]
            order = np.lexsort((times_arr, rank))
            ids_arr, times_arr = ids_arr[order], times_arr[order]
            values = {f: [v[i] for i in order] for f, v in values.items()}
        ds = Dataset(schema, values, ids=ids_arr, times=times_arr)
        check_series_order(ds)
        return ds
    return Dataset(schema, values, ids=ids if id_col else None)


def series_order_problems(ds: Dataset) -> list[str]:
    problems = []
    for key, sl in ds.iter_series():
        t = ds.times[sl]
        if ds.schema.pattern is Pattern.REGULAR:
            if not np.array_equal(t, np.arange(1, len(t) + 1)):
                problems.append(f"series {key!r}: regular time index must run 1..T")
        else:
            if len(t) and t[0] <= 0:
                problems.append(f"series {key!r}: timestamps must be positive")
            if np.any(np.diff(t) <= 0):
                problems.append(f"series {key!r}: timestamps not strictly increasing")
    return problems


def check_series_order(ds: Dataset) -> None:
    problems = series_order_problems(ds)
    if problems:
        raise SeriesOrderError(problems[0])


def _fmt(value) -> str:
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    return str(value)


def write_dataset(ds: Dataset, path, layout: Layout | None = None) -> None:
    """Write a dataset as CSV; reals are written with round-trip precision."""
    layout = layout or default_layout(ds.schema)
    header, cols = [], []
    id_col = layout.id_column() if ds.ids is not None else None
    if ds.ids is not None:
        header.append(id_col or "record_id")
        cols.append(ds.ids)
    if ds.times is not None:
        header.append(layout.time or "time")
        cols.append(ds.times)
    for c in ds.schema.columns:
        header.append(layout.source(c))
        cols.append(ds[c])
    with Path(path).open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for i in range(ds.n_rows):
            w.writerow([_fmt(col[i]) for col in cols])


def load_composite(manifest_path) -> CompositeDataset:
    """Load a composite dataset from a JSON manifest.

    Manifest: ``{"linkage": name|null, "parts": {part: {"data", "schema", "layout"?}}}``
    with paths relative to the manifest.
    """
    manifest_path = Path(manifest_path)
    doc = _read_json(manifest_path)
    extra = set(doc) - {"linkage", "parts"}
    if extra:
        raise SchemaError(f"unknown manifest keys: {sorted(extra)}")
    base = manifest_path.parent
    parts = {}
    for name, spec in doc.get("parts", {}).items():
        bad = set(spec) - {"data", "schema", "layout"}
        if bad:
            raise SchemaError(f"unknown keys for part {name!r}: {sorted(bad)}")
        schema = load_schema(base / spec["schema"])
        layout = load_layout(base / spec["layout"]) if spec.get("layout") else None
        if layout is None and not schema.pattern.is_series and doc.get("linkage"):
            layout = Layout(record_id=doc["linkage"])
        parts[name] = load_dataset(base / spec["data"], schema, layout)
    if not parts:
        raise LinkageError("manifest lists no parts")
    return CompositeDataset(parts, doc.get("linkage"))


def write_composite(comp: CompositeDataset, directory) -> Path:
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    manifest = {"linkage": comp.linkage, "parts": {}}
    for name, ds in comp.parts.items():
        if ds.schema.pattern.is_series:
            layout = Layout(series_id=comp.linkage or "series_id", time="time")
        else:
            layout = Layout(record_id=comp.linkage or "record_id") if ds.ids is not None else Layout()
        write_dataset(ds, directory / f"{name}.csv", layout)
        save_json(ds.schema.to_dict(), directory / f"{name}.schema.json")
        save_json(layout.to_dict(), directory / f"{name}.layout.json")
        manifest["parts"][name] = {"data": f"{name}.csv", "schema": f"{name}.schema.json",
                                   "layout": f"{name}.layout.json"}
    path = directory / "manifest.json"
    save_json(manifest, path)
    return path
