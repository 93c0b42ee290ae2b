"""Feature kinds, observation patterns, schemas and metadata."""
from __future__ import annotations

import enum
import hashlib
import json
import math
from dataclasses import dataclass, field
from typing import Any, Iterable, Union

from ..errors import SchemaError


@dataclass(frozen=True)
class Continuous:
    lower: float
    upper: float

    def __post_init__(self):
        if not (math.isfinite(self.lower) and math.isfinite(self.upper)):
            raise SchemaError("continuous bounds must be finite")
        if self.lower > self.upper:
            raise SchemaError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, value) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class Integer:
    lower: int
    upper: int

    def __post_init__(self):
        if self.lower > self.upper:
            raise SchemaError(f"lower bound {self.lower} exceeds upper bound {self.upper}")

    def contains(self, value) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class Categorical:
    categories: tuple[str, ...]

    def __post_init__(self):
        cats = tuple(str(c) for c in self.categories)
        object.__setattr__(self, "categories", cats)
        if not cats:
            raise SchemaError("categorical feature needs at least one category")
        if len(set(cats)) != len(cats):
            raise SchemaError(f"duplicate categories in {cats}")

    def contains(self, value) -> bool:
        return value in self.categories


@dataclass(frozen=True)
class Censored:
    """A (time, event) pair referring to two ordinary columns of the schema."""

    time: str
    event: str


FeatureKind = Union[Continuous, Integer, Categorical, Censored]


class Pattern(str, enum.Enum):
    STATIC = "static"
    REGULAR = "regular"
    IRREGULAR = "irregular"

    @property
    def is_series(self) -> bool:
        return self is not Pattern.STATIC


@dataclass(frozen=True)
class Feature:
    name: str
    kind: FeatureKind

    @property
    def is_numeric(self) -> bool:
        return isinstance(self.kind, (Continuous, Integer))


def _kind_to_dict(kind: FeatureKind) -> dict:
    if isinstance(kind, Continuous):
        return {"type": "continuous", "lower": kind.lower, "upper": kind.upper}
    if isinstance(kind, Integer):
        return {"type": "integer", "lower": kind.lower, "upper": kind.upper}
    if isinstance(kind, Categorical):
        return {"type": "categorical", "categories": list(kind.categories)}
    return {"type": "censored", "time": kind.time, "event": kind.event}


_KIND_KEYS = {
    "continuous": {"lower", "upper"},
    "integer": {"lower", "upper"},
    "categorical": {"categories"},
    "censored": {"time", "event"},
}


def _kind_from_dict(d: dict) -> FeatureKind:
    kind = d.get("type")
    if kind not in _KIND_KEYS:
        raise SchemaError(f"unknown feature type {kind!r}")
    extra = set(d) - _KIND_KEYS[kind] - {"type", "name"}
    if extra:
        raise SchemaError(f"unknown keys for {kind} feature: {sorted(extra)}")
    missing = _KIND_KEYS[kind] - set(d)
    if missing:
        raise SchemaError(f"{kind} feature missing keys: {sorted(missing)}")
    if kind == "continuous":
        return Continuous(float(d["lower"]), float(d["upper"]))
    if kind == "integer":
        lo, hi = d["lower"], d["upper"]
        if int(lo) != lo or int(hi) != hi:
            raise SchemaError("integer bounds must be integral")
        return Integer(int(lo), int(hi))
    if kind == "categorical":
        return Categorical(tuple(d["categories"]))
    return Censored(str(d["time"]), str(d["event"]))


@dataclass(frozen=True)
class Schema:
    features: tuple[Feature, ...]
    pattern: Pattern = Pattern.STATIC

    def __post_init__(self):
        object.__setattr__(self, "features", tuple(self.features))
        object.__setattr__(self, "pattern", Pattern(self.pattern))
        names = [f.name for f in self.features]
        if len(set(names)) != len(names):
            raise SchemaError(f"duplicate feature names in {names}")
        censored = [f for f in self.features if isinstance(f.kind, Censored)]
        if len(censored) > 1:
            raise SchemaError("at most one censored pair per schema")
        by_name = {f.name: f for f in self.features}
        for f in censored:
            t, e = by_name.get(f.kind.time), by_name.get(f.kind.event)
            if t is None or e is None:
                raise SchemaError(f"censored pair {f.name!r} references missing columns")
            if not isinstance(t.kind, Continuous) or t.kind.lower < 0:
                raise SchemaError("censored time column must be continuous with lower bound >= 0")
            if not isinstance(e.kind, Integer) or e.kind.lower < 0 or e.kind.upper > 1:
                raise SchemaError("censored event column must be integer within [0, 1]")

    # -- lookup
    @property
    def columns(self) -> tuple[str, ...]:
        """Names of the stored columns (censored pairs are views over two columns)."""
        return tuple(f.name for f in self.features if not isinstance(f.kind, Censored))

    @property
    def censored(self) -> Feature | None:
        for f in self.features:
            if isinstance(f.kind, Censored):
                return f
        return None

    def __contains__(self, name: str) -> bool:
        return any(f.name == name for f in self.features)

    def __getitem__(self, name: str) -> Feature:
        for f in self.features:
            if f.name == name:
                return f
        raise SchemaError(f"unknown feature {name!r}")

    def kind(self, name: str) -> FeatureKind:
        return self[name].kind

    def numeric_columns(self) -> list[str]:
        return [f.name for f in self.features if f.is_numeric]

    def categorical_columns(self) -> list[str]:
        return [f.name for f in self.features if isinstance(f.kind, Categorical)]

    # -- derivation
    def select(self, names: Iterable[str], pattern: Pattern | None = None) -> Schema:
        """Sub-schema with the named columns; a censored pair survives only if both ends do."""
        keep = set(names)
        feats = []
        for f in self.features:
            if isinstance(f.kind, Censored):
                if f.kind.time in keep and f.kind.event in keep:
                    feats.append(f)
            elif f.name in keep:
                feats.append(f)
        return Schema(tuple(feats), pattern or self.pattern)

    def drop(self, names: Iterable[str]) -> Schema:
        gone = set(names)
        return self.select([c for c in self.columns if c not in gone])

    def with_pattern(self, pattern: Pattern) -> Schema:
        return Schema(self.features, pattern)

    # -- serialization
    def to_dict(self) -> dict:
        return {
            "pattern": self.pattern.value,
            "features": [{"name": f.name, **_kind_to_dict(f.kind)} for f in self.features],
        }

    @classmethod
    def from_dict(cls, d: dict) -> Schema:
        extra = set(d) - {"pattern", "features"}
        if extra:
            raise SchemaError(f"unknown schema keys: {sorted(extra)}")
        try:
            pattern = Pattern(d.get("pattern", "static"))
        except ValueError as exc:
            raise SchemaError(f"unknown observation pattern {d.get('pattern')!r}") from exc
        feats = []
        for fd in d.get("features", []):
            if "name" not in fd:
                raise SchemaError("feature without a name")
            feats.append(Feature(str(fd["name"]), _kind_from_dict(fd)))
        return cls(tuple(feats), pattern)

    def fingerprint(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(blob.encode()).hexdigest()[:16]


@dataclass(frozen=True)
class Metadata:
    sensitive_features: frozenset[str] = field(default_factory=frozenset)
    outcome_features: frozenset[str] = field(default_factory=frozenset)
    group_feature: str | None = None
    quasi_identifiers: frozenset[str] = field(default_factory=frozenset)

    def __post_init__(self):
        for name in ("sensitive_features", "outcome_features", "quasi_identifiers"):
            object.__setattr__(self, name, frozenset(getattr(self, name)))

    def referenced(self) -> set[str]:
        names = set(self.sensitive_features) | set(self.outcome_features) | set(self.quasi_identifiers)
        if self.group_feature is not None:
            names.add(self.group_feature)
        return names

    def problems(self, schema: Schema) -> list[str]:
        return [f"metadata references unknown feature {n!r}" for n in sorted(self.referenced()) if n not in schema]

    def to_dict(self) -> dict:
        return {
            "sensitive_features": sorted(self.sensitive_features),
            "outcome_features": sorted(self.outcome_features),
            "group_feature": self.group_feature,
            "quasi_identifiers": sorted(self.quasi_identifiers),
        }

    @classmethod
    def from_dict(cls, d: dict[str, Any]) -> Metadata:
        extra = set(d) - {"sensitive_features", "outcome_features", "group_feature", "quasi_identifiers"}
        if extra:
            raise SchemaError(f"unknown metadata keys: {sorted(extra)}")
        return cls(
            frozenset(d.get("sensitive_features", ())),
            frozenset(d.get("outcome_features", ())),
            d.get("group_feature"),
            frozenset(d.get("quasi_identifiers", ())),
        )
