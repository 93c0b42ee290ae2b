"""Small synthetic reference datasets and a ready-to-run benchmark configuration."""
from __future__ import annotations

from pathlib import Path

import numpy as np

from .data import Categorical, Censored, Continuous, Dataset, Feature, Integer, Metadata, Pattern, Schema
from .data.io import save_json, write_dataset

MIXED_SCHEMA = Schema((
    Feature("age", Continuous(18.0, 90.0)),
    Feature("income", Continuous(0.0, 250.0)),
    Feature("education", Categorical(("primary", "secondary", "tertiary"))),
    Feature("sex", Categorical(("f", "m"))),
    Feature("children", Integer(0, 6)),
    Feature("approved", Integer(0, 1)),
), Pattern.STATIC)

SURVIVAL_SCHEMA = Schema((
    Feature("dose", Continuous(0.0, 1.0)),
    Feature("arm", Categorical(("control", "treated"))),
    Feature("time", Continuous(0.0, 1000.0)),
    Feature("event", Integer(0, 1)),
    Feature("outcome", Censored("time", "event")),
), Pattern.STATIC)


def mixed_dataset(n: int = 2000, seed: int = 0) -> Dataset:
    """Correlated static records: age drives income and education, which drive approval."""
    rng = np.random.default_rng(seed)
    age = np.clip(rng.normal(45, 14, n), 18, 90)
    edu_score = (age - 45) / 14 + rng.normal(0, 1, n)
    education = np.where(edu_score < -0.5, "primary", np.where(edu_score < 0.7, "secondary", "tertiary"))
    bonus = np.select([education == "secondary", education == "tertiary"], [15.0, 40.0], 0.0)
    income = np.clip(20 + 0.8 * age + bonus + rng.normal(0, 12, n), 0, 250)
    sex = rng.choice(["f", "m"], n)
    children = np.clip(rng.poisson(np.clip((age - 18) / 20, 0.1, None)), 0, 6)
    logit = (income - 75) / 15
    approved = (rng.random(n) < 1 / (1 + np.exp(-logit))).astype(np.int64)
    return Dataset(MIXED_SCHEMA, {"age": age, "income": income, "education": education, "sex": sex,
                                  "children": children, "approved": approved})


def survival_dataset(n: int = 2000, seed: int = 0) -> Dataset:
    """Right-censored times whose hazard depends on dose and arm."""
    rng = np.random.default_rng(seed)
    dose = rng.uniform(0, 1, n)
    arm = rng.choice(["control", "treated"], n)
    rate = 0.01 * np.exp(1.2 * dose - 0.7 * (arm == "treated"))
    event_time = rng.exponential(1 / rate)
    censor_time = rng.uniform(0, 250, n)
    time = np.minimum(np.minimum(event_time, censor_time), 1000.0)
    event = (event_time <= censor_time).astype(np.int64)
    return Dataset(SURVIVAL_SCHEMA, {"dose": dose, "arm": arm, "time": time, "event": event})


MIXED_METADATA = Metadata(sensitive_features=frozenset({"approved"}), outcome_features=frozenset({"approved"}),
                          quasi_identifiers=frozenset({"age", "sex", "education"}))
SURVIVAL_METADATA = Metadata(sensitive_features=frozenset({"event"}),
                             quasi_identifiers=frozenset({"arm", "dose"}))


def demo_config(repeats: int = 3, seed: int = 0) -> dict:
    return {
        "datasets": [
            {"name": "mixed", "data": "mixed.csv", "schema": "mixed.schema.json",
             "metadata": "mixed.metadata.json", "task": {"outcome": "approved", "kind": "classification"}},
            {"name": "survival", "data": "survival.csv", "schema": "survival.schema.json",
             "metadata": "survival.metadata.json", "task": {"outcome": "outcome", "kind": "survival"}},
        ],
        "plugins": [{"name": "marginal"}, {"name": "bayes_net"}, {"name": "privbayes", "config": {"epsilon": 1.0}}],
        "evaluation": {},
        "repeats": repeats,
        "seed": seed,
        "split": 0.5,
        "generation": "match-real",
    }


def write_demo(directory, n: int = 2000, seed: int = 0, repeats: int = 3) -> Path:
    """Write both demo datasets with schemas and metadata; return the benchmark config path."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for name, ds, md in (("mixed", mixed_dataset(n, seed), MIXED_METADATA),
                         ("survival", survival_dataset(n, seed + 1), SURVIVAL_METADATA)):
        write_dataset(ds, directory / f"{name}.csv")
        save_json(ds.schema.to_dict(), directory / f"{name}.schema.json")
        save_json(md.to_dict(), directory / f"{name}.metadata.json")
    path = directory / "benchmark.json"
    save_json(demo_config(repeats, seed), path)
    return path
