"""Censoring-aware generation: covariates, then censoring flag, then time, then KM calibration."""
from __future__ import annotations

from dataclasses import replace

import numpy as np

from ..data import Dataset, Schema
from ..data.transforms import EncodingMap
from ..errors import ConfigError, NoEventsError, UnsupportedModalityError
from ..numeric.glm import DEFAULT_L2, GlmModel, _sigmoid, fit_glm
from ..numeric.rng import RngStream
from ..numeric.survival import StepFunction, kaplan_meier, km_distance
from .base import GeneratorModel, Plugin, PluginDescriptor, fit, generate, get_plugin, register

CALIBRATION_DRAWS = 10_000
CALIBRATION_KNOTS = 100
_TINY_TIME = 1e-12


def _model_to_state(m: GeneratorModel) -> dict:
    return {"plugin": m.plugin, "version": m.version, "fingerprint": m.schema_fingerprint, "seed": m.seed,
            "state": m.state, "dp_budget": m.dp_budget}


def _model_from_state(s: dict) -> GeneratorModel:
    return GeneratorModel(s["plugin"], s["version"], s["fingerprint"], int(s["seed"]), s["state"], s["dp_budget"])


# -- outcome stages (shared with the series plugins for terminal censored pairs)

def fit_outcome(X: np.ndarray, times: np.ndarray, events: np.ndarray) -> dict:
    """Censoring model and per-subpopulation log-normal time regressions."""
    n = times.size
    if n == 0:
        raise NoEventsError("no rows to fit the survival stages on")
    censored = (events == 0).astype(np.float64)
    if censored.min() == censored.max():
        censor = {"kind": "const", "p": float(censored[0])}
    else:
        g = fit_glm(X, censored, "logistic", DEFAULT_L2)
        censor = {"kind": "glm", "coef": g.coef, "intercept": g.intercept}
    logt = np.log(np.maximum(times, _TINY_TIME))
    stages = {}
    for label, mask in (("event", events == 1), ("censored", events == 0)):
        stages[label] = _fit_time(X[mask], logt[mask])
    if stages["event"] is None:
        stages["event"] = stages["censored"]
    if stages["censored"] is None:
        stages["censored"] = stages["event"]
    return {"censor": censor, "time_event": stages["event"], "time_censored": stages["censored"]}


def _fit_time(X: np.ndarray, logt: np.ndarray) -> dict | None:
    m = logt.size
    if m == 0:
        return None
    if m < 2 or X.shape[1] == 0:
        mu = float(logt.mean())
        return {"coef": np.zeros(X.shape[1]), "intercept": mu, "sd": float(logt.std())}
    g = fit_glm(X, logt, "linear", DEFAULT_L2)
    resid = logt - g.predict(X)
    return {"coef": g.coef, "intercept": g.intercept, "sd": float(np.sqrt(np.mean(resid ** 2)))}


def censor_probability(outcome: dict, X: np.ndarray) -> np.ndarray:
    c = outcome["censor"]
    if c["kind"] == "const":
        return np.full(X.shape[0], c["p"])
    return _sigmoid(X @ np.asarray(c["coef"]) + c["intercept"])


def sample_outcome(outcome: dict, X: np.ndarray, rng: np.random.Generator, calibration=None):
    """Draw (time, event) per covariate row; times pass through the calibration map if given."""
    n = X.shape[0]
    censored = rng.random(n) < censor_probability(outcome, X)
    z = rng.standard_normal(n)
    times = np.empty(n)
    for label, mask in (("time_event", ~censored), ("time_censored", censored)):
        st = outcome[label]
        times[mask] = np.exp(X[mask] @ np.asarray(st["coef"]) + st["intercept"] + st["sd"] * z[mask])
    if calibration is not None:
        times = apply_calibration(calibration, times)
    return times, (~censored).astype(np.int64)


# -- calibration map

def _km_quantile(curve: StepFunction, q: np.ndarray) -> np.ndarray:
    cdf = 1.0 - curve.values
    idx = np.searchsorted(cdf, q - 1e-12, side="left")
    return curve.knots[np.minimum(idx, len(curve.knots) - 1)]


def build_calibration(source: StepFunction, target: StepFunction, knots: int = CALIBRATION_KNOTS) -> dict | None:
    """Monotone piecewise-linear map sending source KM quantiles onto target KM quantiles."""
    if len(source.knots) == 0 or len(target.knots) == 0:
        return None
    top = min(1.0 - source.values[-1], 1.0 - target.values[-1])
    if top <= 0:
        return None
    levels = np.arange(1, knots + 1) / (knots + 1) * top
    src = np.maximum.accumulate(_km_quantile(source, levels))
    dst = np.maximum.accumulate(_km_quantile(target, levels))
    keep = np.concatenate([[True], np.diff(src) > 0])
    src, dst = src[keep], dst[keep]
    if src[0] <= 0:
        return None
    return {"src": src, "dst": dst}


def apply_calibration(cal: dict, t: np.ndarray) -> np.ndarray:
    src, dst = np.asarray(cal["src"]), np.asarray(cal["dst"])
    t = np.asarray(t, dtype=np.float64)
    out = np.interp(t, src, dst)
    low, high = t < src[0], t > src[-1]
    out[low] = t[low] * (dst[0] / src[0])
    out[high] = t[high] * (dst[-1] / src[-1])
    return out


# -- plugin

def _pair_columns(schema: Schema) -> tuple[str, str]:
    c = schema.censored
    if c is None:
        raise UnsupportedModalityError("survival generation needs a censored (time, event) pair")
    return c.kind.time, c.kind.event


def covariate_columns(schema: Schema) -> list[str]:
    t, e = _pair_columns(schema)
    return [c for c in schema.columns if c not in (t, e)]


@register
class SurvivalPipeline(Plugin):
    """Covariates from a base plugin, logistic censoring, log-normal times, KM calibration."""

    descriptor = PluginDescriptor("survival_pipeline", frozenset({"survival"}))
    defaults = {"base_plugin": "bayes_net", "base_config": {}, "calibrate": True}

    def validate_config(self, config):
        base = get_plugin(config["base_plugin"])
        if "static" not in base.descriptor.patterns:
            raise ConfigError(f"base plugin {config['base_plugin']!r} cannot model static covariates")
        if not isinstance(config["base_config"], dict):
            raise ConfigError("base_config must be a mapping")

    def fit_state(self, data, metadata, config, rng):
        t_col, e_col = _pair_columns(data.schema)
        covs = covariate_columns(data.schema)
        cov_schema = data.schema.select(covs)
        enc = EncodingMap.from_schema(cov_schema)
        base = None
        if covs:
            base_seed = int(rng.integers(2**31))
            base = _model_to_state(fit(config["base_plugin"], data.select(covs), None, config["base_config"],
                                       seed=base_seed))
        X = enc.transform(data.select(covs)) if covs else np.zeros((data.n_rows, 0))
        times = np.asarray(data[t_col], dtype=np.float64)
        events = np.asarray(data[e_col], dtype=np.int64)
        outcome = fit_outcome(X, times, events)
        km = kaplan_meier(times, events)
        state = {"schema": data.schema.to_dict(), "covariates": covs, "cov_schema": cov_schema.to_dict(),
                 "base": base, "outcome": outcome, "km_real": {"knots": km.knots, "values": km.values},
                 "calibration": None, "calibration_check": None}
        if config["calibrate"]:
            state = _calibrated_state(state, km, int(rng.integers(2**31)))
        return state

    def generate_data(self, state, count, evidence, rng):
        return _generate(state, count, rng, calibrated=True)


def _covariates(state: dict, count: int, rng: np.random.Generator) -> tuple[Dataset | None, np.ndarray]:
    if not state["covariates"]:
        return None, np.zeros((count, 0))
    base = _model_from_state(state["base"])
    cov = generate(base, count, seed=int(rng.integers(2**31)))
    enc = EncodingMap.from_schema(Schema.from_dict(state["cov_schema"]))
    return cov, enc.transform(cov)


def _generate(state: dict, count: int, rng: np.random.Generator, calibrated: bool) -> Dataset:
    schema = Schema.from_dict(state["schema"])
    t_col, e_col = _pair_columns(schema)
    cov, X = _covariates(state, count, rng)
    cal = state["calibration"] if calibrated else None
    times, events = sample_outcome(state["outcome"], X, rng, cal)
    cols = {t_col: times, e_col: events}
    if cov is not None:
        cols.update({c: cov[c] for c in state["covariates"]})
    return Dataset(schema, cols)


def _calibrated_state(state: dict, km_real: StepFunction, seed: int) -> dict:
    rng = RngStream(seed, 5).generator()
    draw = _generate(state, CALIBRATION_DRAWS, rng, calibrated=False)
    schema = Schema.from_dict(state["schema"])
    t_col, e_col = _pair_columns(schema)
    t, e = np.asarray(draw[t_col]), np.asarray(draw[e_col])
    upper = schema.kind(t_col).upper
    before = km_distance(kaplan_meier(np.minimum(t, upper), e), km_real)
    cal = build_calibration(kaplan_meier(t, e), km_real)
    after = None
    if cal is not None:
        after = km_distance(kaplan_meier(np.minimum(apply_calibration(cal, t), upper), e), km_real)
        if after > before:
            cal = None  # keep the uncalibrated sampler when the map does not help
    state = dict(state)
    state["calibration"] = cal
    state["calibration_check"] = {"km_distance_before": before, "km_distance_after": after}
    return state


def calibrate_km(model: GeneratorModel, dataset: Dataset, seed: int | None = None) -> GeneratorModel:
    """Fit the time calibration map against the KM curve of ``dataset``."""
    if model.plugin != "survival_pipeline":
        raise ConfigError(f"calibration needs a survival_pipeline model, got {model.plugin!r}")
    t_col, e_col = _pair_columns(dataset.schema)
    km = kaplan_meier(dataset[t_col], dataset[e_col])
    state = dict(model.state)
    state["calibration"] = None
    state["km_real"] = {"knots": km.knots, "values": km.values}
    state = _calibrated_state(state, km, model.seed if seed is None else seed)
    return replace(model, state=state)


def calibration_map(model: GeneratorModel):
    """The fitted time map as a callable (identity when uncalibrated)."""
    cal = model.state["calibration"]
    if cal is None:
        return lambda t: np.asarray(t, dtype=np.float64)
    return lambda t: apply_calibration(cal, np.atleast_1d(np.asarray(t, dtype=np.float64)))


def censoring_glm(model: GeneratorModel) -> GlmModel | None:
    c = model.state["outcome"]["censor"]
    if c["kind"] == "const":
        return None
    return GlmModel("logistic", np.asarray(c["coef"]), float(c["intercept"]), DEFAULT_L2)


def event_probability(model: GeneratorModel, covariates: Dataset) -> np.ndarray:
    enc = EncodingMap.from_schema(Schema.from_dict(model.state["cov_schema"]))
    X = enc.transform(covariates) if model.state["covariates"] else np.zeros((covariates.n_rows, 0))
    return 1.0 - censor_probability(model.state["outcome"], X)
