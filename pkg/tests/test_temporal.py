import dataclasses

import numpy as np
import pytest
from conftest import ar_series, composite, irregular_series

from tabsynth.data import CompositeDataset, Dataset
from tabsynth.errors import LinkageError, ShortSeriesError
from tabsynth.plugins import fit, generate


def _lag1_oracle(ds):
    """Least squares of x_t on (1, x_{t-1}) pooled over series."""
    y, x = [], []
    for v in _per_series(ds, "v"):
        y.append(v[1:])
        x.append(v[:-1])
    y, x = np.concatenate(y), np.concatenate(x)
    design = np.column_stack([np.ones_like(x), x])
    return np.linalg.lstsq(design, y, rcond=None)[0][1]


def _per_series(ds, column):
    values = np.asarray(ds.times if column == "times" else ds[column], dtype=float)
    return [values[rows] for _, rows in ds.iter_series()]


def test_white_noise_coefficient_near_zero():
    ds = ar_series(200, 50, coef=0.0, sd=1.0, seed=3)
    coef = fit("prob_ar", ds).state["lag_coef"][0, 0, 0]
    assert coef == pytest.approx(_lag1_oracle(ds), abs=1e-10)
    assert abs(coef) < 0.03


def test_series_of_length_order_is_rejected():
    with pytest.raises(ShortSeriesError):
        fit("prob_ar", ar_series(5, 1))
    with pytest.raises(ShortSeriesError):
        fit("prob_ar", ar_series(5, 2), config={"order": 2})


def test_horizons_follow_training_lengths():
    out = generate(fit("prob_ar", ar_series(30, 50)), 40, seed=1)
    assert {len(v) for v in _per_series(out, "v")} == {50}


def test_deterministic_recursion_is_constant():
    model = fit("prob_ar", ar_series(10, 6))
    state = dict(model.state)
    state["lag_coef"] = np.ones_like(state["lag_coef"])
    state["intercept"] = np.zeros_like(state["intercept"])
    state["sd"] = np.zeros_like(state["sd"])
    state["window_numeric"] = np.full_like(state["window_numeric"], 2.5)
    out = generate(dataclasses.replace(model, state=state), 20, seed=0)
    assert np.all(np.asarray(out["v"]) == 2.5)


# -- irregular

def test_gap_parameters_recovered():
    ds = irregular_series(500, 12, mu=0.0, sigma=0.5, seed=4)
    gap = fit("irregular_ar", ds).state["gap"]
    logs = np.concatenate([np.log(np.diff(np.concatenate([[0.0], t]))) for t in _per_series(ds, "times")])
    assert gap["mu"] == pytest.approx(logs.mean(), abs=1e-10)
    assert gap["sigma"] == pytest.approx(logs.std(), abs=1e-10)
    assert abs(gap["mu"]) < 0.05 and abs(gap["sigma"] - 0.5) < 0.05


def test_generated_timestamps_strictly_increase():
    out = generate(fit("irregular_ar", irregular_series(50, 8, seed=5)), 10_000, seed=6)
    stamps = _per_series(out, "times")
    assert len(stamps) == 10_000
    assert sum(int(np.sum(np.diff(t) <= 0)) for t in stamps) == 0
    assert min(t[0] for t in stamps) > 0


def test_zero_sigma_gives_regular_spacing():
    ds = irregular_series(40, 8, mu=0.3, sigma=0.0, seed=7)
    model = fit("irregular_ar", ds)
    assert model.state["gap"]["sigma"] == pytest.approx(0.0, abs=1e-12)
    out = generate(model, 30, seed=8)
    for t in _per_series(out, "times"):
        np.testing.assert_allclose(np.diff(t), np.exp(0.3), rtol=1e-9)


# -- composite

def test_composite_flag_shift_is_reproduced():
    model = fit("composite_bn_ar", composite(2000, 10, shift=5.0, seed=9))
    out = generate(model, 2000, seed=10)
    person, visits = out.parts["person"], out.parts["visits"]
    flag = dict(zip(person.ids, np.asarray(person["flag"])))
    means = {0: [], 1: []}
    v = np.asarray(visits["v"])
    for key, rows in visits.iter_series():
        means[int(flag[key])].append(np.mean(v[rows]))
    # oracle: difference of the two group means of per-series averages
    assert np.mean(means[1]) - np.mean(means[0]) == pytest.approx(5.0, abs=0.3)


def test_composite_zero_rows():
    out = generate(fit("composite_bn_ar", composite(50, 5)), 0, seed=0)
    assert isinstance(out, CompositeDataset)
    assert set(out.parts) == {"person", "visits"}
    assert all(len(p) == 0 for p in out.parts.values())


def test_series_key_missing_from_static_part():
    comp = composite(20, 4)
    person = comp.parts["person"]
    keep = np.arange(1, len(person))
    static = Dataset(person.schema, {c: np.asarray(person[c])[keep] for c in person.schema.columns},
                     ids=np.asarray(person.ids)[keep])
    with pytest.raises(LinkageError):
        fit("composite_bn_ar", CompositeDataset({"person": static, "visits": comp.parts["visits"]}, linkage="id"))
