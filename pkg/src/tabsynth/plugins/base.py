"""Uniform generator contract: fit, generate, serialize, domain enforcement."""
from __future__ import annotations

import hashlib
import io
import json
import struct
from dataclasses import dataclass, field
from typing import Any, Mapping

import numpy as np

from ..data import Categorical, CompositeDataset, Continuous, Dataset, Integer, Metadata, Pattern, Schema, validate
from ..errors import (
    CapabilityError,
    ConditionError,
    ConfigError,
    CorruptionError,
    DomainError,
    FingerprintError,
    MissingValueError,
    NonPositiveGapError,
    SeriesOrderError,
    UnknownFeatureError,
    UnsupportedModalityError,
    VersionError,
)
from ..numeric.rng import RngStream

MAGIC = b"SBM1"
FORMAT_VERSION = 1
MAX_CONDITION_ATTEMPTS = 1000


@dataclass(frozen=True)
class PluginDescriptor:
    name: str
    patterns: frozenset
    conditional: bool = False
    dp: bool = False
    debias: bool = False
    version: str = "1"


@dataclass(frozen=True)
class GeneratorModel:
    plugin: str
    version: str
    schema_fingerprint: str
    seed: int
    state: dict = field(repr=False)
    dp_budget: dict | None = None


class Plugin:
    """Base class for generator plugins.

    Subclasses set ``descriptor`` and ``defaults`` and implement
    :meth:`fit_state` and :meth:`generate_data`. Plugin state must be a tree
    of dicts, lists, scalars and numpy arrays so it can be serialized.
    """

    descriptor: PluginDescriptor
    defaults: dict = {}

    def check_config(self, config: dict) -> dict:
        unknown = set(config) - set(self.defaults)
        if unknown:
            raise ConfigError(f"{self.descriptor.name}: unknown hyperparameters {sorted(unknown)}")
        merged = {**self.defaults, **config}
        self.validate_config(merged)
        return merged

    def validate_config(self, config: dict) -> None:
        pass

    def dp_budget(self, config: dict) -> dict | None:
        return None

    def fit_state(self, data, metadata: Metadata, config: dict, rng: np.random.Generator) -> dict:
        raise NotImplementedError

    def generate_data(self, state: dict, count: int, evidence: dict, rng: np.random.Generator):
        raise NotImplementedError

    def output_schema(self, state: dict):
        return Schema.from_dict(state["schema"])


REGISTRY: dict[str, Plugin] = {}


def register(plugin_cls):
    plugin = plugin_cls()
    name = plugin.descriptor.name
    if name in REGISTRY:
        raise ConfigError(f"plugin {name!r} registered twice")
    REGISTRY[name] = plugin
    return plugin_cls


def get_plugin(name: str) -> Plugin:
    try:
        return REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown plugin {name!r}; available: {sorted(REGISTRY)}") from None


def list_plugins() -> list[PluginDescriptor]:
    return [REGISTRY[n].descriptor for n in sorted(REGISTRY)]


def modality(data) -> str:
    if isinstance(data, CompositeDataset):
        return "composite"
    if data.schema.pattern.is_series:
        return data.schema.pattern.value
    return "survival" if data.schema.censored is not None else "static"


def data_fingerprint(data) -> str:
    if isinstance(data, CompositeDataset):
        parts = sorted((n, d.schema.fingerprint()) for n, d in data.parts.items())
        blob = json.dumps([parts, data.linkage])
        return hashlib.sha256(blob.encode()).hexdigest()[:16]
    return data.schema.fingerprint()


_VIOLATION_ERRORS = {"MissingValueError": MissingValueError, "SeriesOrderError": SeriesOrderError}


def _check_valid(data) -> None:
    datasets = data.parts.values() if isinstance(data, CompositeDataset) else [data]
    for ds in datasets:
        report = validate(ds)
        if not report.ok:
            first = report.violations[0]
            cls = _VIOLATION_ERRORS.get(first.kind, DomainError)
            if cls is SeriesOrderError and ds.schema.pattern is Pattern.IRREGULAR:
                cls = NonPositiveGapError
            raise cls("; ".join(v.message for v in report.violations))


def fit(plugin: str, data, metadata: Metadata | None = None, config: Mapping | None = None,
        seed: int = 0) -> GeneratorModel:
    """Fit a registered plugin; the result is a deterministic function of its inputs."""
    p = get_plugin(plugin)
    mod = modality(data)
    if mod not in p.descriptor.patterns:
        raise UnsupportedModalityError(
            f"plugin {plugin!r} supports {sorted(p.descriptor.patterns)}, not {mod!r} data")
    cfg = p.check_config(dict(config or {}))
    metadata = metadata or Metadata()
    if not isinstance(data, CompositeDataset):
        problems = metadata.problems(data.schema)
        if problems:
            raise UnknownFeatureError(problems[0])
    _check_valid(data)
    rng = RngStream(seed, 0).generator()
    state = p.fit_state(data, metadata, cfg, rng)
    state["config"] = cfg
    model = GeneratorModel(plugin, p.descriptor.version, data_fingerprint(data), int(seed), state,
                           p.dp_budget(cfg))
    # normalize state to its serialized form so fresh and reloaded models behave identically
    return load_model(save_model(model))


# -- conditions

@dataclass(frozen=True)
class Condition:
    """Evidence: exact values for categorical/integer features, ``(lo, hi)`` for continuous ones."""

    evidence: Mapping[str, Any]

    def resolve(self, schema: Schema) -> tuple[dict, dict]:
        exact, intervals = {}, {}
        for name, value in self.evidence.items():
            if name not in schema.columns:
                raise UnknownFeatureError(f"condition references unknown feature {name!r}")
            kind = schema.kind(name)
            if isinstance(kind, Continuous):
                if not isinstance(value, (tuple, list)) or len(value) != 2:
                    raise ConditionError(f"continuous evidence on {name!r} must be an interval (lo, hi)")
                lo, hi = float(value[0]), float(value[1])
                if lo > hi or hi < kind.lower or lo > kind.upper:
                    raise DomainError(f"interval {value} for {name!r} misses the domain")
                intervals[name] = (max(lo, kind.lower), min(hi, kind.upper))
            elif isinstance(kind, Integer):
                v = int(value)
                if v != value and str(v) != str(value):
                    raise DomainError(f"{value!r} is not an integer")
                if not kind.contains(v):
                    raise DomainError(f"{v} outside the domain of {name!r}")
                exact[name] = v
            else:
                v = str(value)
                if not kind.contains(v):
                    raise DomainError(f"{v!r} is not a category of {name!r}")
                exact[name] = v
        return exact, intervals

    def mask(self, ds: Dataset) -> np.ndarray:
        exact, intervals = self.resolve(ds.schema)
        ok = np.ones(ds.n_rows, dtype=bool)
        for name, v in exact.items():
            ok &= ds[name] == v
        for name, (lo, hi) in intervals.items():
            ok &= (ds[name] >= lo) & (ds[name] <= hi)
        return ok

    @classmethod
    def parse(cls, items, schema: Schema) -> Condition:
        """Build from ``name=value`` / ``name=lo:hi`` strings (CLI form)."""
        evidence = {}
        for item in items:
            if "=" not in item:
                raise ConditionError(f"expected name=value, got {item!r}")
            name, raw = item.split("=", 1)
            if name not in schema.columns:
                raise UnknownFeatureError(f"condition references unknown feature {name!r}")
            kind = schema.kind(name)
            if isinstance(kind, Continuous):
                lo, sep, hi = raw.partition(":")
                if not sep:
                    raise ConditionError(f"continuous evidence {item!r} needs the form lo:hi")
                evidence[name] = (float(lo), float(hi))
            elif isinstance(kind, Integer):
                evidence[name] = int(raw)
            else:
                evidence[name] = raw
        return cls(evidence)


def generate(model: GeneratorModel, count: int, condition: Condition | None = None, seed: int = 0,
             schema: Schema | None = None):
    """Sample ``count`` records (or series) from a fitted model.

    Output always satisfies the schema domains (clamp policy). Categorical
    and integer evidence is enforced by construction; continuous intervals
    by rejection with at most 1000 draws per requested row.
    """
    p = get_plugin(model.plugin)
    if model.version != p.descriptor.version:
        raise FingerprintError(f"model built by {model.plugin} v{model.version}, installed v{p.descriptor.version}")
    if schema is not None and schema.fingerprint() != model.schema_fingerprint:
        raise FingerprintError("requested schema does not match the schema the model was fitted on")
    if count < 0:
        raise ConfigError("count must be non-negative")
    rng = RngStream(seed, 1).generator()
    if condition is not None and condition.evidence:
        if not p.descriptor.conditional:
            raise CapabilityError(f"plugin {model.plugin!r} does not support conditional generation")
        return _generate_conditional(p, model, count, condition, rng)
    out = p.generate_data(model.state, count, {}, rng)
    return _enforce_all(out, rng)


def _enforce_all(out, rng):
    if isinstance(out, CompositeDataset):
        return CompositeDataset({n: enforce_domain(d, d.schema, "clamp", rng)[0] for n, d in out.parts.items()},
                                out.linkage)
    return enforce_domain(out, out.schema, "clamp", rng)[0]


def _generate_conditional(p: Plugin, model: GeneratorModel, count: int, condition: Condition, rng):
    schema = p.output_schema(model.state)
    exact, intervals = condition.resolve(schema)
    if not intervals:
        out = _enforce_all(p.generate_data(model.state, count, exact, rng), rng)
        assert condition.mask(out).all()
        return out
    accepted, have, budget = [], 0, MAX_CONDITION_ATTEMPTS * max(count, 1)
    while have < count:
        if budget <= 0:
            raise ConditionError(f"interval evidence unmet after {MAX_CONDITION_ATTEMPTS} attempts per row")
        draw = min(budget, max(2 * (count - have), 64))
        budget -= draw
        batch = _enforce_all(p.generate_data(model.state, draw, exact, rng), rng)
        keep = np.flatnonzero(condition.mask(batch))[: count - have]
        if keep.size:
            accepted.append(batch.take_rows(keep))
            have += keep.size
    if not accepted:
        return _enforce_all(p.generate_data(model.state, 0, exact, rng), rng)
    return concat_rows(accepted)


def concat_rows(parts: list[Dataset]) -> Dataset:
    first = parts[0]
    cols = {c: np.concatenate([d[c] for d in parts]) for c in first.schema.columns}
    ids = None if first.ids is None else np.concatenate([d.ids for d in parts])
    times = None if first.times is None else np.concatenate([d.times for d in parts])
    return Dataset(first.schema, cols, ids=ids, times=times)


# -- domain enforcement

def enforce_domain(ds: Dataset, schema: Schema, policy: str = "clamp", rng=0) -> tuple[Dataset, int]:
    """Bring values into their declared domains.

    ``clamp`` moves numeric values to the nearest bound and resamples
    invalid categories from the valid values' marginal; ``reject`` drops
    violating rows (whole series for series data). Returns the dataset and
    the number of dropped rows/series.
    """
    if policy not in ("clamp", "reject"):
        raise ConfigError(f"unknown policy {policy!r}")
    rng = rng if isinstance(rng, np.random.Generator) else RngStream(int(rng), 2).generator()
    bad = np.zeros(ds.n_rows, dtype=bool)
    cols = {}
    for name in schema.columns:
        kind = schema.kind(name)
        col = ds[name]
        if isinstance(kind, Categorical):
            invalid = np.array([v not in kind.categories for v in col], dtype=bool)
            bad |= invalid
            if policy == "clamp" and invalid.any():
                valid = col[~invalid]
                pool = valid if valid.size else np.asarray(kind.categories, dtype=object)
                col = col.copy()
                col[invalid] = pool[rng.integers(0, len(pool), int(invalid.sum()))]
        else:
            if col.dtype.kind == "f":
                nan = np.isnan(col)
                invalid = nan | (col < kind.lower) | (col > kind.upper)
            else:
                invalid = (col < kind.lower) | (col > kind.upper)
            bad |= invalid
            if policy == "clamp" and invalid.any():
                col = np.clip(col, kind.lower, kind.upper)
                if col.dtype.kind == "f" and np.isnan(col).any():
                    col = np.where(np.isnan(col), (kind.lower + kind.upper) / 2, col)
        cols[name] = col
    if policy == "clamp":
        if not bad.any() and schema == ds.schema:
            return ds, 0
        return Dataset(schema, cols, ids=ds.ids, times=ds.times), 0
    if not bad.any():
        return (ds if schema == ds.schema else Dataset(schema, cols, ids=ds.ids, times=ds.times)), 0
    if schema.pattern.is_series:
        bounds = ds.series_bounds()
        keep = [i for i, (a, b) in enumerate(bounds) if not bad[a:b].any()]
        out = Dataset(schema, cols, ids=ds.ids, times=ds.times).take(keep)
        return out, len(bounds) - len(keep)
    keep = np.flatnonzero(~bad)
    return Dataset(schema, cols, ids=ds.ids, times=ds.times).take_rows(keep), int(bad.sum())


# -- serialization

def _encode_tree(obj, arrays: list):
    if isinstance(obj, dict):
        return {str(k): _encode_tree(v, arrays) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_encode_tree(v, arrays) for v in obj]
    if isinstance(obj, np.ndarray):
        if obj.dtype == object or obj.dtype.kind in "US":
            return {"__sa__": [None if v is None else str(v) for v in obj.reshape(-1)], "shape": list(obj.shape)}
        arrays.append(np.ascontiguousarray(obj))
        return {"__nd__": len(arrays) - 1}
    if isinstance(obj, np.generic):
        return obj.item()
    if obj is None or isinstance(obj, (bool, int, float, str)):
        return obj
    raise TypeError(f"cannot serialize {type(obj).__name__} in model state")


def _decode_tree(obj, arrays: list):
    if isinstance(obj, dict):
        if "__nd__" in obj and len(obj) == 1:
            return arrays[obj["__nd__"]]
        if "__sa__" in obj:
            arr = np.empty(len(obj["__sa__"]), dtype=object)
            arr[:] = obj["__sa__"]
            return arr.reshape(obj["shape"])
        return {k: _decode_tree(v, arrays) for k, v in obj.items()}
    if isinstance(obj, list):
        return [_decode_tree(v, arrays) for v in obj]
    return obj


def _section(name: str, data: bytes) -> bytes:
    raw = name.encode()
    return struct.pack("<H", len(raw)) + raw + struct.pack("<Q", len(data)) + data


def save_model(model: GeneratorModel) -> bytes:
    """Serialize: magic, format version, length-prefixed sections, SHA-256 trailer."""
    arrays: list[np.ndarray] = []
    tree = _encode_tree(model.state, arrays)
    header = {"plugin": model.plugin, "version": model.version, "schema_fingerprint": model.schema_fingerprint,
              "seed": model.seed, "dp_budget": model.dp_budget}
    sections = [_section("header", json.dumps(header, sort_keys=True).encode()),
                _section("state", json.dumps(tree, sort_keys=True).encode())]
    for i, arr in enumerate(arrays):
        buf = io.BytesIO()
        np.save(buf, arr, allow_pickle=False)
        sections.append(_section(f"array:{i}", buf.getvalue()))
    body = MAGIC + struct.pack("<HI", FORMAT_VERSION, len(sections)) + b"".join(sections)
    return body + hashlib.sha256(body).digest()


def load_model(blob: bytes) -> GeneratorModel:
    blob = bytes(blob)
    if len(blob) < 10 or blob[:4] != MAGIC:
        raise CorruptionError("not a model file (bad magic header)")
    version, n_sections = struct.unpack_from("<HI", blob, 4)
    if version != FORMAT_VERSION:
        raise VersionError(f"model format version {version}, this build reads {FORMAT_VERSION}")
    if len(blob) < 10 + 32 or hashlib.sha256(blob[:-32]).digest() != blob[-32:]:
        raise CorruptionError("checksum mismatch (truncated or modified model file)")
    pos, end, sections = 10, len(blob) - 32, {}
    try:
        for _ in range(n_sections):
            (nlen,) = struct.unpack_from("<H", blob, pos)
            name = blob[pos + 2:pos + 2 + nlen].decode()
            pos += 2 + nlen
            (dlen,) = struct.unpack_from("<Q", blob, pos)
            pos += 8
            if pos + dlen > end:
                raise CorruptionError("section overruns file")
            sections[name] = blob[pos:pos + dlen]
            pos += dlen
        header = json.loads(sections["header"])
        tree = json.loads(sections["state"])
        arrays = []
        i = 0
        while f"array:{i}" in sections:
            arr = np.load(io.BytesIO(sections[f"array:{i}"]), allow_pickle=False)
            arrays.append(arr)
            i += 1
    except (struct.error, KeyError, ValueError, UnicodeDecodeError) as exc:
        raise CorruptionError(f"malformed model file: {exc}") from exc
    return GeneratorModel(header["plugin"], header["version"], header["schema_fingerprint"], header["seed"],
                          _decode_tree(tree, arrays), header["dp_budget"])
