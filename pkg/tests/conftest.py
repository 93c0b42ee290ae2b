import numpy as np
import pytest
from hypothesis import settings

from tabsynth.data import Categorical, Continuous, Dataset, Feature, Integer, Pattern, Schema

settings.register_profile("default", deadline=None, max_examples=40)
settings.load_profile("default")


def static_schema(*features):
    return Schema(tuple(Feature(n, k) for n, k in features), Pattern.STATIC)


def mixed(n=300, seed=0):
    """Small correlated mixed-type table used across modules."""
    rng = np.random.default_rng(seed)
    x = rng.normal(0, 1, n)
    g = np.where(x + rng.normal(0, 0.5, n) > 0, "b", "a")
    k = np.clip(np.round(2 + x + rng.normal(0, 0.5, n)), 0, 5).astype(int)
    schema = static_schema(("x", Continuous(-6.0, 6.0)), ("g", Categorical(("a", "b"))), ("k", Integer(0, 5)))
    return Dataset(schema, {"x": np.clip(x, -6, 6), "g": g, "k": k})


def chain(n, seed, flip=0.1, names=("x1", "x2", "x3")):
    """Binary chain: each variable a noisy copy of its predecessor."""
    rng = np.random.default_rng(seed)
    cols = {names[0]: rng.integers(0, 2, n)}
    for prev, cur in zip(names, names[1:]):
        cols[cur] = np.where(rng.random(n) < flip, 1 - cols[prev], cols[prev])
    schema = static_schema(*((c, Categorical(("0", "1"))) for c in names))
    return Dataset(schema, {c: v.astype(str) for c, v in cols.items()})


def ar_series(n_series, length, coef=0.8, sd=0.1, seed=0, lower=-50.0, upper=50.0):
    rng = np.random.default_rng(seed)
    x = np.empty((n_series, length))
    x[:, 0] = rng.normal(0, sd / np.sqrt(1 - coef**2), n_series)
    for t in range(1, length):
        x[:, t] = coef * x[:, t - 1] + rng.normal(0, sd, n_series)
    schema = Schema((Feature("v", Continuous(lower, upper)),), Pattern.REGULAR)
    ids = np.repeat([f"s{i}" for i in range(n_series)], length)
    times = np.tile(np.arange(1, length + 1), n_series)
    return Dataset(schema, {"v": x.reshape(-1)}, ids=ids, times=times)


@pytest.fixture
def mixed_ds():
    return mixed()


def irregular_series(n_series, length, mu=0.0, sigma=0.5, seed=0):
    """AR(1) values observed at log-normal gaps; the first gap is measured from time 0."""
    rng = np.random.default_rng(seed)
    gaps = rng.lognormal(mu, sigma, (n_series, length))
    times = np.cumsum(gaps, axis=1)
    x = np.empty((n_series, length))
    x[:, 0] = rng.normal(0, 0.2, n_series)
    for t in range(1, length):
        x[:, t] = 0.7 * x[:, t - 1] + rng.normal(0, 0.1, n_series)
    schema = Schema((Feature("v", Continuous(-50.0, 50.0)),), Pattern.IRREGULAR)
    ids = np.repeat([f"s{i}" for i in range(n_series)], length)
    return Dataset(schema, {"v": x.reshape(-1)}, ids=ids, times=times.reshape(-1))


def composite(n, length=10, shift=5.0, seed=0):
    """Static binary flag that shifts the level of a linked AR(1) series."""
    from tabsynth.data import CompositeDataset

    rng = np.random.default_rng(seed)
    flag = rng.integers(0, 2, n)
    keys = [f"r{i}" for i in range(n)]
    static = Dataset(static_schema(("flag", Integer(0, 1)), ("age", Continuous(0.0, 100.0))),
                     {"flag": flag, "age": rng.uniform(20, 80, n)}, ids=keys)
    x = np.empty((n, length))
    level = shift * flag
    x[:, 0] = level + rng.normal(0, 0.3, n)
    for t in range(1, length):
        x[:, t] = level + 0.5 * (x[:, t - 1] - level) + rng.normal(0, 0.3, n)
    series = Dataset(Schema((Feature("v", Continuous(-50.0, 50.0)),), Pattern.REGULAR), {"v": x.reshape(-1)},
                     ids=np.repeat(keys, length), times=np.tile(np.arange(1, length + 1), n))
    return CompositeDataset({"person": static, "visits": series}, linkage="id")


def survival_table(n, seed=0):
    from tabsynth.demo import survival_dataset

    return survival_dataset(n, seed)
