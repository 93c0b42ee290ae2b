"""Immutable column-oriented datasets for static, series and composite data."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Mapping

import numpy as np
import pandas as pd

from ..errors import DomainError, LinkageError, MissingValueError, SchemaError
from .schema import Categorical, Continuous, Integer, Pattern, Schema


def _frozen(arr: np.ndarray) -> np.ndarray:
    arr.flags.writeable = False
    return arr


def _as_str_array(values) -> np.ndarray:
    out = np.empty(len(values), dtype=object)
    for i, v in enumerate(values):
        out[i] = None if v is None or (isinstance(v, float) and np.isnan(v)) else str(v)
    return out


def coerce_column(name: str, kind, values) -> np.ndarray:
    if isinstance(kind, Continuous):
        return np.array(values, dtype=np.float64, copy=True).reshape(-1)
    if isinstance(kind, Integer):
        arr = np.asarray(values)
        if arr.dtype.kind in "iub":
            return arr.astype(np.int64).reshape(-1)
        if arr.dtype.kind == "f":
            if np.isnan(arr).any():
                raise MissingValueError(f"column {name!r} has missing values")
            rounded = np.round(arr)
            if not np.array_equal(rounded, arr):
                raise DomainError(f"column {name!r} holds non-integral values")
            return rounded.astype(np.int64).reshape(-1)
        try:
            return np.array([int(v) for v in arr.reshape(-1)], dtype=np.int64)
        except (TypeError, ValueError) as exc:
            raise DomainError(f"column {name!r} is not integer-valued") from exc
    return _as_str_array(list(np.asarray(values, dtype=object).reshape(-1)))


class Dataset:
    """A typed table.

    Static data keeps one row per record. Series data is stored in long
    format: ``ids`` names the series of each row and ``times`` its timestamp;
    rows are grouped by series in order of first appearance. Static parts of
    a composite dataset may carry record ``ids`` used as the join key.
    """

    __slots__ = ("schema", "_columns", "ids", "times", "_bounds")

    def __init__(self, schema: Schema, columns: Mapping[str, object], ids=None, times=None):
        self.schema = schema
        missing = [c for c in schema.columns if c not in columns]
        if missing:
            raise SchemaError(f"dataset lacks columns {missing}")
        cols = {c: coerce_column(c, schema.kind(c), columns[c]) for c in schema.columns}
        lengths = {len(v) for v in cols.values()}
        if ids is not None:
            ids = _as_str_array(list(ids))
            lengths.add(len(ids))
        if times is not None:
            dtype = np.int64 if schema.pattern is Pattern.REGULAR else np.float64
            times = np.array(times, dtype=dtype).reshape(-1)
            lengths.add(len(times))
        if len(lengths) > 1:
            raise SchemaError(f"column lengths differ: {sorted(lengths)}")
        if schema.pattern.is_series:
            if ids is None or times is None:
                raise SchemaError("series data needs series ids and times")
            order = _group_order(ids)
            if order is not None:
                cols = {c: v[order] for c, v in cols.items()}
                ids, times = ids[order], times[order]
        self._columns = {c: _frozen(v) for c, v in cols.items()}
        self.ids = None if ids is None else _frozen(ids)
        self.times = None if times is None else _frozen(times)
        self._bounds = _series_bounds(self.ids) if schema.pattern.is_series else None

    # -- construction helpers
    @classmethod
    def from_frame(cls, frame: pd.DataFrame, schema: Schema, id_column: str | None = None,
                   time_column: str | None = None) -> Dataset:
        cols = {c: frame[c].to_numpy() for c in schema.columns}
        ids = None if id_column is None else frame[id_column].to_numpy()
        times = None if time_column is None else frame[time_column].to_numpy()
        return cls(schema, cols, ids=ids, times=times)

    def to_frame(self, id_column: str = "series_id", time_column: str = "time") -> pd.DataFrame:
        data = {}
        if self.ids is not None:
            data[id_column] = self.ids
        if self.times is not None:
            data[time_column] = self.times
        data.update(self._columns)
        return pd.DataFrame(data)

    # -- size
    @property
    def n_rows(self) -> int:
        return len(next(iter(self._columns.values()))) if self._columns else (
            0 if self.ids is None else len(self.ids))

    @property
    def n_series(self) -> int:
        return len(self._bounds) if self._bounds is not None else 0

    def __len__(self) -> int:
        return self.n_series if self.schema.pattern.is_series else self.n_rows

    # -- access
    def __getitem__(self, name: str) -> np.ndarray:
        try:
            return self._columns[name]
        except KeyError:
            raise SchemaError(f"unknown column {name!r}") from None

    @property
    def columns(self) -> dict[str, np.ndarray]:
        return dict(self._columns)

    def series_bounds(self) -> list[tuple[int, int]]:
        if self._bounds is None:
            raise SchemaError("static dataset has no series")
        return list(self._bounds)

    def series_keys(self) -> list[str]:
        return [self.ids[a] for a, _ in self.series_bounds()]

    def iter_series(self) -> Iterator[tuple[str, slice]]:
        for a, b in self.series_bounds():
            yield self.ids[a], slice(a, b)

    def horizons(self) -> np.ndarray:
        return np.array([b - a for a, b in self.series_bounds()], dtype=np.int64)

    # -- derivation
    def take(self, rows) -> Dataset:
        """Subset of rows (static) or of series (series patterns), order as given."""
        rows = np.asarray(rows, dtype=np.int64)
        if self.schema.pattern.is_series:
            bounds = self.series_bounds()
            parts = [np.arange(*bounds[i]) for i in rows]
            rows = np.concatenate(parts) if parts else np.zeros(0, dtype=np.int64)
        return Dataset(
            self.schema,
            {c: v[rows] for c, v in self._columns.items()},
            ids=None if self.ids is None else self.ids[rows],
            times=None if self.times is None else self.times[rows],
        )

    def take_rows(self, rows) -> Dataset:
        rows = np.asarray(rows, dtype=np.int64)
        return Dataset(
            self.schema,
            {c: v[rows] for c, v in self._columns.items()},
            ids=None if self.ids is None else self.ids[rows],
            times=None if self.times is None else self.times[rows],
        )

    def select(self, names) -> Dataset:
        schema = self.schema.select(names)
        return Dataset(schema, {c: self._columns[c] for c in schema.columns}, ids=self.ids, times=self.times)

    def replace(self, schema: Schema | None = None, columns: Mapping | None = None, ids=None,
                times=None) -> Dataset:
        schema = schema or self.schema
        cols = dict(self._columns)
        if columns:
            cols.update(columns)
        return Dataset(
            schema, {c: cols[c] for c in schema.columns},
            ids=self.ids if ids is None else ids,
            times=self.times if times is None else times,
        )

    def equals(self, other: Dataset, atol: float = 0.0) -> bool:
        if self.schema != other.schema or self.n_rows != other.n_rows:
            return False
        for c in self.schema.columns:
            a, b = self[c], other[c]
            if a.dtype == np.float64:
                if not np.allclose(a, b, rtol=0, atol=atol):
                    return False
            elif not np.array_equal(a, b):
                return False
        for a, b in ((self.ids, other.ids), (self.times, other.times)):
            if (a is None) != (b is None):
                return False
            if a is not None and not np.array_equal(a, b):
                return False
        return True

    def __repr__(self):
        kind = self.schema.pattern.value
        return f"Dataset({kind}, N={len(self)}, rows={self.n_rows}, columns={list(self.schema.columns)})"


def _group_order(ids: np.ndarray) -> np.ndarray | None:
    if len(ids) == 0:
        return None
    _, first, inverse = np.unique(ids, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))
    group = rank[inverse]
    order = np.argsort(group, kind="stable")
    if np.array_equal(order, np.arange(len(ids))):
        return None
    return order


def _series_bounds(ids: np.ndarray) -> list[tuple[int, int]]:
    if len(ids) == 0:
        return []
    change = np.flatnonzero(ids[1:] != ids[:-1]) + 1
    starts = np.concatenate([[0], change])
    stops = np.concatenate([change, [len(ids)]])
    return [(int(a), int(b)) for a, b in zip(starts, stops)]


@dataclass(frozen=True)
class CompositeDataset:
    """Named sub-datasets, optionally linked by record/series ids.

    Supported shapes: several static parts, or one static part plus one
    regular or irregular series part. For the static+series shape every
    series id must appear among the static part's record ids.
    """

    parts: Mapping[str, Dataset]
    linkage: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "parts", dict(self.parts))
        static = [n for n, d in self.parts.items() if not d.schema.pattern.is_series]
        series = [n for n, d in self.parts.items() if d.schema.pattern.is_series]
        if not static:
            raise LinkageError("composite dataset needs a static part")
        if series and (len(series) > 1 or len(static) > 1):
            raise LinkageError("supported shapes: multiple static parts, or one static + one series part")
        if series:
            if self.linkage is None:
                raise LinkageError("static + series composites need a join key")
            sd, ts = self.parts[static[0]], self.parts[series[0]]
            if sd.ids is None:
                raise LinkageError(f"static part {static[0]!r} carries no record ids")
            if len(set(sd.ids)) != len(sd.ids):
                raise LinkageError("static record ids must be unique")
            known = set(sd.ids)
            absent = [k for k in ts.series_keys() if k not in known]
            if absent:
                raise LinkageError(f"series keys absent from static part: {absent[:5]}")
        elif self.linkage is not None:
            for n in static:
                ids = self.parts[n].ids
                if ids is None or len(set(ids)) != len(ids):
                    raise LinkageError(f"part {n!r} needs unique record ids for linkage")

    @property
    def static_name(self) -> str:
        return next(n for n, d in self.parts.items() if not d.schema.pattern.is_series)

    @property
    def series_name(self) -> str | None:
        return next((n for n, d in self.parts.items() if d.schema.pattern.is_series), None)

    def __getitem__(self, name: str) -> Dataset:
        return self.parts[name]
