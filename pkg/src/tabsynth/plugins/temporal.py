"""Autoregressive series generators: regular, irregular (log-normal gaps) and static+series composites."""
from __future__ import annotations

import numpy as np

from .. import _kernels
from ..data import Categorical, CompositeDataset, Dataset, Feature, Integer, Pattern, Schema
from ..data.transforms import EncodingMap
from ..errors import ConfigError, LinkageError, NonPositiveGapError, ShortSeriesError
from .base import GeneratorModel, Plugin, PluginDescriptor, fit, generate, register
from .survival import _model_from_state, _model_to_state, fit_outcome, sample_outcome

CROSS_LAG_LIMIT = 10


def _roles(schema: Schema) -> tuple[list[str], list[str], tuple[str, str] | None]:
    pair = None
    if schema.censored is not None:
        pair = (schema.censored.kind.time, schema.censored.kind.event)
    skip = set(pair or ())
    numeric = [c for c in schema.columns if c not in skip and not isinstance(schema.kind(c), Categorical)]
    categorical = [c for c in schema.columns if isinstance(schema.kind(c), Categorical)]
    return numeric, categorical, pair


def _check_config(config: dict) -> None:
    p = config["order"]
    if not isinstance(p, int) or isinstance(p, bool) or p < 1:
        raise ConfigError(f"order must be a positive integer, got {p!r}")
    if config["smoothing"] < 0:
        raise ConfigError("smoothing must be non-negative")


def series_gaps(ds: Dataset) -> np.ndarray:
    """Inter-arrival gap preceding each row; the first row's gap is measured from time 0."""
    t = np.asarray(ds.times, dtype=np.float64)
    gaps = np.empty_like(t)
    for a, b in ds.series_bounds():
        gaps[a:b] = np.diff(t[a:b], prepend=0.0)
    return gaps


def fit_ar_state(ds: Dataset, order: int, smoothing: float, irregular: bool = False,
                 static_X: np.ndarray | None = None) -> dict:
    """Pooled least-squares AR(p) per numeric feature plus order-1 chains for categoricals.

    ``static_X`` (one row per series) adds covariates that shift each
    series' intercept; ``irregular`` adds the preceding gap as a covariate.
    """
    p = order
    numeric, categorical, pair = _roles(ds.schema)
    bounds = ds.series_bounds()
    if not bounds:
        raise ShortSeriesError("no series to fit")
    lengths = np.array([b - a for a, b in bounds])
    if lengths.min() < p + 1:
        raise ShortSeriesError(f"every series needs at least {p + 1} observations; shortest has {lengths.min()}")
    starts = np.array([a for a, _ in bounds])
    n_series, F = len(bounds), len(numeric)
    rows = np.concatenate([np.arange(a + p, b) for a, b in bounds])
    owner = np.repeat(np.arange(n_series), lengths - p)
    V = np.column_stack([np.asarray(ds[c], dtype=np.float64) for c in numeric]) if F else np.zeros((ds.n_rows, 0))
    gaps = series_gaps(ds) if irregular else None
    if irregular and np.any(gaps <= 0):
        raise NonPositiveGapError("inter-arrival gaps must be positive")
    W = 0 if static_X is None else static_X.shape[1]
    cross = F <= CROSS_LAG_LIMIT
    lag_coef = np.zeros((F, p, F))
    gap_coef = np.zeros(F)
    static_coef = np.zeros((F, W))
    intercept = np.zeros(F)
    sd = np.zeros(F)
    lags = [V[rows - k] for k in range(1, p + 1)]
    for f in range(F):
        blocks = [lag if cross else lag[:, [f]] for lag in lags]
        if irregular:
            blocks.append(gaps[rows][:, None])
        if W:
            blocks.append(static_X[owner])
        design = np.column_stack([np.ones(rows.size)] + blocks)
        beta, *_ = np.linalg.lstsq(design, V[rows, f], rcond=None)
        resid = V[rows, f] - design @ beta
        intercept[f] = beta[0]
        pos = 1
        for k in range(p):
            if cross:
                lag_coef[f, k, :] = beta[pos:pos + F]
                pos += F
            else:
                lag_coef[f, k, f] = beta[pos]
                pos += 1
        if irregular:
            gap_coef[f] = beta[pos]
            pos += 1
        static_coef[f] = beta[pos:pos + W]
        sd[f] = np.sqrt(np.mean(resid ** 2))

    transitions, cat_codes = [], []
    is_start = np.zeros(ds.n_rows, dtype=bool)
    is_start[starts] = True
    succ = np.flatnonzero(~is_start)
    for c in categorical:
        cats = ds.schema.kind(c).categories
        lookup = {v: i for i, v in enumerate(cats)}
        codes = np.array([lookup[v] for v in ds[c]], dtype=np.int64)
        counts = np.zeros((len(cats), len(cats)))
        np.add.at(counts, (codes[succ - 1], codes[succ]), 1.0)
        counts += smoothing
        totals = counts.sum(axis=1, keepdims=True)
        trans = np.where(totals > 0, counts / np.where(totals > 0, totals, 1.0), 1.0 / len(cats))
        transitions.append(trans)
        cat_codes.append(codes)

    window_rows = starts[:, None] + np.arange(p)[None, :]
    values, counts = np.unique(lengths, return_counts=True)
    state = {
        "order": p, "numeric": numeric, "categorical": categorical, "cross": cross,
        "lag_coef": lag_coef, "gap_coef": gap_coef, "static_coef": static_coef,
        "intercept": intercept, "sd": sd, "transitions": transitions,
        "window_numeric": V[window_rows],
        "window_codes": np.stack(cat_codes, axis=-1)[window_rows] if categorical
        else np.zeros((n_series, p, 0), dtype=np.int64),
        "horizon_values": values, "horizon_counts": counts,
        "gap": None, "window_gaps": None, "terminal": None,
    }
    if irregular:
        logg = np.log(gaps)
        state["gap"] = {"mu": float(logg.mean()), "sigma": float(logg.std())}
        state["window_gaps"] = gaps[window_rows]
    if pair is not None:
        ends = starts + lengths - 1
        X = _terminal_covariates(lengths, V[ends])
        state["terminal"] = {"pair": list(pair),
                             "outcome": fit_outcome(X, np.asarray(ds[pair[0]], dtype=np.float64)[ends],
                                                    np.asarray(ds[pair[1]], dtype=np.int64)[ends])}
    return state


def _terminal_covariates(horizons: np.ndarray, last_values: np.ndarray) -> np.ndarray:
    return np.column_stack([np.asarray(horizons, dtype=np.float64), last_values])


def simulate_ar(state: dict, n: int, rng: np.random.Generator, static_X: np.ndarray | None = None,
                windows: np.ndarray | None = None) -> dict:
    """Run the fitted recursion for ``n`` new series.

    Returns per-series horizons, a padded (n, T_max, F) numeric array, a
    padded code array for categoricals and, for irregular models, gaps.
    ``windows`` selects the training series whose first p rows seed each draw.
    """
    p = int(state["order"])
    lag_coef = np.asarray(state["lag_coef"])
    F = lag_coef.shape[0]
    wn, wc = np.asarray(state["window_numeric"]), np.asarray(state["window_codes"])
    probs = np.asarray(state["horizon_counts"], dtype=np.float64)
    T = rng.choice(np.asarray(state["horizon_values"]), size=n, p=probs / probs.sum()) if n else np.zeros(0, int)
    if windows is None:
        windows = rng.integers(0, wn.shape[0], size=n)
    t_max = int(T.max()) if n else p
    X = np.empty((n, t_max, F))
    X[:, :p] = wn[windows]
    gaps = None
    if state["gap"] is not None:
        gaps = np.empty((n, t_max))
        gaps[:, :p] = np.asarray(state["window_gaps"])[windows]
        g = state["gap"]
        gaps[:, p:] = np.exp(g["mu"] + g["sigma"] * rng.standard_normal((n, t_max - p)))
    base = np.broadcast_to(np.asarray(state["intercept"]), (n, F)).copy()
    if static_X is not None and static_X.shape[1]:
        base += static_X @ np.asarray(state["static_coef"]).T
    sd, gap_coef = np.asarray(state["sd"]), np.asarray(state["gap_coef"])
    for t in range(p, t_max):
        pred = base.copy()
        for k in range(1, p + 1):
            pred += X[:, t - k] @ lag_coef[:, k - 1, :].T
        if gaps is not None:
            pred += gaps[:, t][:, None] * gap_coef
        X[:, t] = pred + sd * rng.standard_normal((n, F))
    C = np.empty((n, t_max, wc.shape[2]), dtype=np.int64)
    C[:, :p] = wc[windows]
    for j, trans in enumerate(state["transitions"]):
        cum = np.cumsum(np.asarray(trans), axis=1)
        for t in range(p, t_max):
            C[:, t, j] = _kernels.sample_categorical(cum, C[:, t - 1, j], rng.random(n))
    return {"horizons": T, "numeric": X, "codes": C, "gaps": gaps}


def assemble_series(schema: Schema, state: dict, sim: dict, keys: list[str], rng: np.random.Generator) -> Dataset:
    """Flatten a simulation into a long-format dataset."""
    T = sim["horizons"]
    n = len(T)
    t_max = sim["numeric"].shape[1]
    live = np.arange(t_max)[None, :] < T[:, None]
    cols = {}
    for f, c in enumerate(state["numeric"]):
        v = sim["numeric"][:, :, f][live]
        cols[c] = np.round(v) if isinstance(schema.kind(c), Integer) else v
    for j, c in enumerate(state["categorical"]):
        cats = np.asarray(schema.kind(c).categories, dtype=object)
        cols[c] = cats[sim["codes"][:, :, j][live]]
    if state["terminal"] is not None:
        t_col, e_col = state["terminal"]["pair"]
        last = sim["numeric"][np.arange(n), T - 1] if n else np.zeros((0, len(state["numeric"])))
        times, events = sample_outcome(state["terminal"]["outcome"], _terminal_covariates(T, last), rng)
        cols[t_col] = np.repeat(times, T)
        cols[e_col] = np.repeat(events, T)
    ids = np.repeat(np.asarray(keys, dtype=object), T)
    if sim["gaps"] is None:
        stamps = np.broadcast_to(np.arange(1, t_max + 1), (n, t_max))[live]
    else:
        stamps = np.cumsum(sim["gaps"], axis=1)[live]
    return Dataset(schema, cols, ids=ids, times=stamps)


@register
class RegularArPlugin(Plugin):
    """Pooled linear AR(p) with Gaussian innovations for regularly sampled series."""

    descriptor = PluginDescriptor("prob_ar", frozenset({"regular"}))
    defaults = {"order": 1, "smoothing": 1.0}

    def validate_config(self, config):
        _check_config(config)

    def fit_state(self, data, metadata, config, rng):
        state = fit_ar_state(data, config["order"], config["smoothing"])
        state["schema"] = data.schema.to_dict()
        return state

    def generate_data(self, state, count, evidence, rng):
        schema = Schema.from_dict(state["schema"])
        sim = simulate_ar(state, count, rng)
        return assemble_series(schema, state, sim, [str(i) for i in range(count)], rng)


@register
class IrregularArPlugin(RegularArPlugin):
    """Log-normal renewal gaps with a gap-aware AR value model."""

    descriptor = PluginDescriptor("irregular_ar", frozenset({"irregular"}))

    def fit_state(self, data, metadata, config, rng):
        state = fit_ar_state(data, config["order"], config["smoothing"], irregular=True)
        state["schema"] = data.schema.to_dict()
        return state


# -- composites

def _prefixed(name: str, part: str) -> str:
    return f"{part}.{name}"


def _join_static(comp: CompositeDataset) -> tuple[Dataset, list]:
    """Join several static parts on the record key (or by position when unlinked)."""
    names = list(comp.parts)
    first = comp.parts[names[0]]
    if comp.linkage is not None:
        keys = list(first.ids)
        for n in names[1:]:
            if set(comp.parts[n].ids) != set(keys):
                raise LinkageError(f"part {n!r} does not share the record keys of {names[0]!r}")
    else:
        sizes = {comp.parts[n].n_rows for n in names}
        if len(sizes) > 1:
            raise LinkageError("unlinked static parts must have equal row counts")
    feats, cols, layout = [], {}, []
    for n in names:
        ds = comp.parts[n]
        if comp.linkage is not None:
            pos = {k: i for i, k in enumerate(ds.ids)}
            idx = np.array([pos[k] for k in keys], dtype=np.int64)
        else:
            idx = np.arange(ds.n_rows)
        for c in ds.schema.columns:
            feats.append(Feature(_prefixed(c, n), ds.schema.kind(c)))
            cols[_prefixed(c, n)] = ds[c][idx]
        layout.append([n, ds.schema.to_dict()])
    return Dataset(Schema(tuple(feats), Pattern.STATIC), cols), layout


@register
class CompositePlugin(Plugin):
    """Bayesian network over the static record, then an AR series whose intercept depends on it."""

    descriptor = PluginDescriptor("composite_bn_ar", frozenset({"composite"}))
    defaults = {"order": 1, "smoothing": 1.0, "bins": 10, "static_smoothing": 1.0}

    def validate_config(self, config):
        _check_config(config)

    def fit_state(self, data, metadata, config, rng):
        bn_config = {"bins": config["bins"], "smoothing": config["static_smoothing"]}
        series_name = data.series_name
        if series_name is None:
            joined, layout = _join_static(data)
            bn = fit("bayes_net", joined, None, bn_config, seed=int(rng.integers(2**31)))
            return {"kind": "static", "layout": layout, "linkage": data.linkage, "static": _model_to_state(bn)}
        static_name = data.static_name
        static, series = data.parts[static_name], data.parts[series_name]
        static_plain = Dataset(static.schema, static.columns)
        bn = fit("bayes_net", static_plain, None, bn_config, seed=int(rng.integers(2**31)))
        enc = EncodingMap.from_schema(static.schema)
        pos = {k: i for i, k in enumerate(static.ids)}
        rows = np.array([pos[k] for k in series.series_keys()], dtype=np.int64)
        static_X = enc.transform(static_plain)[rows]
        irregular = series.schema.pattern is Pattern.IRREGULAR
        ar = fit_ar_state(series, config["order"], config["smoothing"], irregular=irregular, static_X=static_X)
        if not np.all(np.isfinite(ar["static_coef"])):
            raise LinkageError("static-to-series link coefficients are not finite")
        return {"kind": "series", "linkage": data.linkage, "static_name": static_name, "series_name": series_name,
                "static_schema": static.schema.to_dict(), "series_schema": series.schema.to_dict(),
                "static_fingerprint": static.schema.fingerprint(), "static": _model_to_state(bn),
                "ar": ar, "train_static_X": static_X}

    def output_schema(self, state):
        raise ConfigError("composite models have no single output schema")

    def generate_data(self, state, count, evidence, rng):
        bn = _model_from_state(state["static"])
        static = generate(bn, count, seed=int(rng.integers(2**31)))
        keys = [str(i) for i in range(count)]
        if state["kind"] == "static":
            return _split_static(static, state, keys)
        static_schema = Schema.from_dict(state["static_schema"])
        static = Dataset(static_schema, static.columns, ids=keys)
        X = EncodingMap.from_schema(static_schema).transform(static) if count else np.zeros((0, 0))
        windows = nearest_windows(X, np.asarray(state["train_static_X"]), rng)
        sim = simulate_ar(state["ar"], count, rng, static_X=X if count else None, windows=windows)
        series = assemble_series(Schema.from_dict(state["series_schema"]), state["ar"], sim, keys, rng)
        return CompositeDataset({state["static_name"]: static, state["series_name"]: series}, state["linkage"])


def _split_static(joined: Dataset, state: dict, keys: list[str]) -> CompositeDataset:
    parts = {}
    for name, schema_dict in state["layout"]:
        schema = Schema.from_dict(schema_dict)
        cols = {c: joined[_prefixed(c, name)] for c in schema.columns}
        parts[name] = Dataset(schema, cols, ids=keys if state["linkage"] is not None else None)
    return CompositeDataset(parts, state["linkage"])


def nearest_windows(Q: np.ndarray, R: np.ndarray, rng: np.random.Generator, chunk: int = 1024) -> np.ndarray:
    """Index of the nearest training static record for each query row, ties broken at random."""
    out = np.empty(Q.shape[0], dtype=np.int64)
    for s in range(0, Q.shape[0], chunk):
        d = _kernels.sq_dists(Q[s:s + chunk], R)
        tie = d <= d.min(axis=1, keepdims=True) + 1e-12
        r = rng.random(d.shape)
        r[~tie] = -1.0
        out[s:s + chunk] = r.argmax(axis=1)
    return out


# -- convenience wrappers

def fit_regular_ar(dataset: Dataset, order: int = 1, seed: int = 0, smoothing: float = 1.0) -> GeneratorModel:
    return fit("prob_ar", dataset, None, {"order": order, "smoothing": smoothing}, seed=seed)


def generate_regular(model: GeneratorModel, n_series: int, seed: int = 0) -> Dataset:
    return generate(model, n_series, seed=seed)


def fit_irregular(dataset: Dataset, order: int = 1, seed: int = 0, smoothing: float = 1.0) -> GeneratorModel:
    return fit("irregular_ar", dataset, None, {"order": order, "smoothing": smoothing}, seed=seed)


def generate_irregular(model: GeneratorModel, n_series: int, seed: int = 0) -> Dataset:
    return generate(model, n_series, seed=seed)


def fit_composite(composite: CompositeDataset, bins: int = 10, order: int = 1, seed: int = 0) -> GeneratorModel:
    return fit("composite_bn_ar", composite, None, {"bins": bins, "order": order}, seed=seed)


def generate_composite(model: GeneratorModel, n: int, seed: int = 0) -> CompositeDataset:
    return generate(model, n, seed=seed)
