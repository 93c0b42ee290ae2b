"""Validation, splitting, discretization and encoding."""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import SizeError, UnseenCategoryError
from .dataset import Dataset
from .io import series_order_problems
from .schema import Categorical, Continuous, Feature, Integer, Metadata, Pattern, Schema


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self):
        return self.ok

    def __len__(self):
        return len(self.violations)


def validate(ds: Dataset, metadata: Metadata | None = None) -> ValidationReport:
    """Collect every invariant violation without raising."""
    out: list[Violation] = []
    for name in ds.schema.columns:
        kind = ds.schema.kind(name)
        col = ds[name]
        if isinstance(kind, Categorical):
            missing = sum(v is None for v in col)
            if missing:
                out.append(Violation("MissingValueError", f"{name}: {missing} missing values"))
            allowed = set(kind.categories)
            bad = sorted({v for v in col if v is not None and v not in allowed})
            if bad:
                out.append(Violation("DomainError", f"{name}: categories {bad} not in {list(kind.categories)}"))
        else:
            if col.dtype.kind == "f" and np.isnan(col).any():
                out.append(Violation("MissingValueError", f"{name}: {int(np.isnan(col).sum())} missing values"))
            finite = col[~np.isnan(col)] if col.dtype.kind == "f" else col
            n_bad = int(((finite < kind.lower) | (finite > kind.upper)).sum())
            if n_bad:
                out.append(Violation("DomainError",
                                     f"{name}: {n_bad} values outside [{kind.lower}, {kind.upper}]"))
    if ds.schema.pattern.is_series:
        out.extend(Violation("SeriesOrderError", m) for m in series_order_problems(ds))
    if metadata is not None:
        out.extend(Violation("MetadataError", m) for m in metadata.problems(ds.schema))
    return ValidationReport(tuple(out))


def split(ds: Dataset, fraction: float, seed: int) -> tuple[Dataset, Dataset]:
    """Random disjoint partition of sizes ceil(f*N) and N - ceil(f*N).

    Series data is split at the series level.
    """
    if not 0.0 < fraction < 1.0:
        raise SizeError(f"fraction must lie in (0, 1), got {fraction}")
    n = len(ds)
    if n < 2:
        raise SizeError(f"need at least 2 records to split, got {n}")
    n_first = math.ceil(round(fraction * n, 9))
    if n_first in (0, n):
        raise SizeError(f"split of N={n} at {fraction} leaves one side empty")
    perm = np.random.default_rng(seed).permutation(n)
    first, second = np.sort(perm[:n_first]), np.sort(perm[n_first:])
    return ds.take(first), ds.take(second)


# -- discretization

@dataclass(frozen=True)
class FeatureBins:
    """Binning of one feature.

    ``mode`` is ``"category"`` (pass-through), ``"atoms"`` (one bin per
    distinct value) or ``"quantile"`` (bins between consecutive ``edges``).
    """

    mode: str
    labels: tuple[str, ...]
    values: tuple = ()
    edges: tuple[float, ...] = ()
    integer: bool = False

    @property
    def n_bins(self) -> int:
        return len(self.labels)

    def codes(self, column: np.ndarray) -> np.ndarray:
        if self.mode == "category":
            lookup = {c: i for i, c in enumerate(self.labels)}
            try:
                return np.fromiter((lookup[v] for v in column), dtype=np.int64, count=len(column))
            except KeyError as exc:
                raise UnseenCategoryError(f"category {exc.args[0]!r} not in {list(self.labels)}") from None
        if self.mode == "atoms":
            vals = np.asarray(self.values, dtype=np.float64)
            col = np.asarray(column, dtype=np.float64)
            idx = np.clip(np.searchsorted(vals, col), 0, len(vals) - 1)
            # nearest atom for values that do not hit one exactly
            lower = np.clip(idx - 1, 0, len(vals) - 1)
            pick_lower = np.abs(col - vals[lower]) < np.abs(col - vals[idx])
            return np.where(pick_lower, lower, idx).astype(np.int64)
        inner = np.asarray(self.edges[1:-1], dtype=np.float64)
        return np.searchsorted(inner, np.asarray(column, dtype=np.float64), side="right").astype(np.int64)

    def inverse(self, codes: np.ndarray, rng: np.random.Generator) -> np.ndarray:
        codes = np.asarray(codes, dtype=np.int64)
        if self.mode == "category":
            return np.asarray(self.labels, dtype=object)[codes]
        if self.mode == "atoms":
            return np.asarray(self.values)[codes]
        edges = np.asarray(self.edges, dtype=np.float64)
        lo, hi = edges[codes], edges[codes + 1]
        u = rng.random(len(codes))
        if not self.integer:
            return lo + u * (hi - lo)
        ilo, ihi = np.ceil(lo), np.floor(hi)
        empty = ilo > ihi
        ilo = np.where(empty, np.round((lo + hi) / 2), ilo)
        ihi = np.where(empty, ilo, ihi)
        return (ilo + np.floor(u * (ihi - ilo + 1))).clip(ilo, ihi).astype(np.int64)


def quantile_edges(values: np.ndarray, bins: int) -> np.ndarray:
    """Quantile bin edges (linear interpolation between order statistics), duplicates merged."""
    edges = np.quantile(np.asarray(values, dtype=np.float64), np.linspace(0.0, 1.0, bins + 1))
    return np.unique(edges)


def fit_bins(feature: Feature, column: np.ndarray, bins: int) -> FeatureBins:
    kind = feature.kind
    if isinstance(kind, Categorical):
        return FeatureBins("category", kind.categories)
    integer = isinstance(kind, Integer)
    distinct = np.unique(column)
    if len(distinct) <= bins:
        vals = tuple(int(v) if integer else float(v) for v in distinct)
        return FeatureBins("atoms", tuple(_label(v) for v in vals), values=vals, integer=integer)
    edges = quantile_edges(column, bins)
    labels = tuple(f"q{i}" for i in range(len(edges) - 1))
    return FeatureBins("quantile", labels, edges=tuple(float(e) for e in edges), integer=integer)


def _label(v) -> str:
    return str(v) if isinstance(v, int) else repr(v)


@dataclass(frozen=True)
class DiscretizationMap:
    features: dict = field(default_factory=dict)

    def schema(self) -> Schema:
        return Schema(tuple(Feature(n, Categorical(b.labels)) for n, b in self.features.items()),
                      Pattern.STATIC)

    def codes(self, ds: Dataset) -> dict[str, np.ndarray]:
        return {n: b.codes(ds[n]) for n, b in self.features.items()}

    def apply(self, ds: Dataset) -> Dataset:
        cols = {}
        for n, b in self.features.items():
            cols[n] = np.asarray(b.labels, dtype=object)[b.codes(ds[n])]
        return Dataset(self.schema(), cols)

    def inverse(self, codes: dict[str, np.ndarray], rng: np.random.Generator) -> dict[str, np.ndarray]:
        return {n: self.features[n].inverse(codes[n], rng) for n in self.features}

    def to_dict(self) -> dict:
        return {n: {"mode": b.mode, "labels": list(b.labels), "values": list(b.values),
                    "edges": list(b.edges), "integer": b.integer} for n, b in self.features.items()}

    @classmethod
    def from_dict(cls, d: dict) -> DiscretizationMap:
        return cls({n: FeatureBins(v["mode"], tuple(v["labels"]), tuple(v["values"]), tuple(v["edges"]),
                                   v["integer"]) for n, v in d.items()})


def discretize(ds: Dataset, bins_per_feature: int, columns=None) -> tuple[Dataset, DiscretizationMap]:
    """Map numeric columns to quantile bins; categorical columns pass through.

    Numeric columns with at most ``bins_per_feature`` distinct values get one
    bin per value, so low-cardinality integers survive exactly.
    """
    if bins_per_feature < 1:
        raise SizeError("bins_per_feature must be positive")
    columns = ds.schema.columns if columns is None else columns
    m = DiscretizationMap({c: fit_bins(ds.schema[c], ds[c], bins_per_feature) for c in columns})
    return m.apply(ds), m


# -- encoding

@dataclass(frozen=True)
class EncodingMap:
    """Min-max scaling to [0, 1] by declared bounds plus one-hot categoricals."""

    entries: tuple  # (name, "numeric", lower, upper) | (name, "onehot", categories)

    @classmethod
    def from_schema(cls, schema: Schema, columns=None) -> EncodingMap:
        entries = []
        for name in schema.columns if columns is None else columns:
            kind = schema.kind(name)
            if isinstance(kind, Categorical):
                entries.append((name, "onehot", kind.categories))
            else:
                entries.append((name, "numeric", float(kind.lower), float(kind.upper)))
        return cls(tuple(entries))

    @property
    def width(self) -> int:
        return sum(len(e[2]) if e[1] == "onehot" else 1 for e in self.entries)

    def slices(self) -> dict[str, slice]:
        out, at = {}, 0
        for e in self.entries:
            w = len(e[2]) if e[1] == "onehot" else 1
            out[e[0]] = slice(at, at + w)
            at += w
        return out

    def transform(self, ds: Dataset) -> np.ndarray:
        X = np.zeros((ds.n_rows, self.width), dtype=np.float64)
        at = 0
        for e in self.entries:
            col = ds[e[0]]
            if e[1] == "numeric":
                lo, hi = e[2], e[3]
                X[:, at] = 0.0 if hi == lo else (np.asarray(col, dtype=np.float64) - lo) / (hi - lo)
                at += 1
            else:
                lookup = {c: i for i, c in enumerate(e[2])}
                try:
                    idx = np.fromiter((lookup[v] for v in col), dtype=np.int64, count=len(col))
                except KeyError as exc:
                    raise UnseenCategoryError(
                        f"column {e[0]!r}: category {exc.args[0]!r} absent from the encoding map") from None
                X[np.arange(len(col)), at + idx] = 1.0
                at += len(e[2])
        return X


def encode(ds: Dataset, encoding: EncodingMap | None = None, columns=None) -> tuple[np.ndarray, EncodingMap]:
    """Numeric matrix for metric-space computations; reuse ``encoding`` for a second dataset."""
    encoding = encoding or EncodingMap.from_schema(ds.schema, columns)
    return encoding.transform(ds), encoding
