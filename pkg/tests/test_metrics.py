import math

import numpy as np
import pytest
from conftest import mixed, static_schema
from hypothesis import given
from hypothesis import strategies as st

from tabsynth.data import Categorical, Continuous, Dataset, Metadata
from tabsynth.errors import UnknownMetricError
from tabsynth.metrics import (
    Direction,
    EvalConfig,
    TaskSpec,
    alpha_precision,
    correct_attribution_probability,
    detection_auc,
    direction_of,
    evaluate,
    fidelity_suite,
    identifiability,
    k_anonymity,
    k_map,
    l_diversity,
    mean_w1,
    prdc,
    qi_keys,
    utility_tstr,
)
from tabsynth.plugins import fit, generate


def _gauss(n, seed, shift=0.0, scale=1.0, d=2):
    rng = np.random.default_rng(seed)
    return rng.normal(0, scale, (n, d)) + shift


def _brute_prdc(R, S, k):
    def kth(X):
        d = np.sqrt(((X[:, None] - X[None]) ** 2).sum(-1))
        return np.sort(d, axis=1)[:, k]  # column 0 is the point itself

    rr, rs = kth(R), kth(S)
    d = np.sqrt(((R[:, None] - S[None]) ** 2).sum(-1))  # real x synth
    inside = d <= rr[:, None]
    precision = np.mean(inside.any(axis=0))
    recall = np.mean((d <= rs[None, :]).any(axis=1))
    density = inside.sum() / (k * len(S))
    coverage = np.mean((d.min(axis=1) <= rr))
    return precision, recall, density, coverage


# -- fidelity

def test_shifted_copy_is_detected():
    rng = np.random.default_rng(0)
    schema = static_schema(("a", Continuous(-20.0, 40.0)), ("b", Continuous(-20.0, 40.0)))
    cols = {c: rng.normal(0, 1, 1500) for c in "ab"}
    real = Dataset(schema, cols)
    synth = Dataset(schema, {c: v + 10 for c, v in cols.items()})
    assert mean_w1(real, synth) == pytest.approx(10 / 60, rel=1e-9)
    report = fidelity_suite(real, synth, EvalConfig(metrics=("detection_auc_linear",)))
    assert report["detection_auc_linear"] >= 0.95


def test_prdc_identity_and_far_shift():
    R = _gauss(300, 1)
    assert prdc(R, R.copy())[0] == 1.0 and prdc(R, R.copy())[1] == 1.0 and prdc(R, R.copy())[3] == 1.0
    p, _, d, c = prdc(R, R + 1000.0)
    assert p == 0.0 and c == 0.0 and d == 0.0


def test_prdc_half_variance_matches_brute_force():
    R, S = _gauss(1000, 2), _gauss(1000, 3, scale=np.sqrt(0.5))
    got = prdc(R, S, 5)
    np.testing.assert_allclose(got, _brute_prdc(R, S, 5), rtol=0, atol=1e-12)
    assert got[0] > got[1]


def test_alpha_precision_extremes():
    R = _gauss(2000, 4)
    center = np.tile(R.mean(axis=0), (50, 1))
    assert alpha_precision(R, center) == pytest.approx(0.5)
    far = R.mean(axis=0) + np.array([100.0, 0.0])
    assert alpha_precision(R, np.tile(far, (50, 1))) == pytest.approx(0.5)
    assert alpha_precision(R, _gauss(2000, 5)) <= 0.05


def test_detection_disjoint_support():
    R = np.random.default_rng(6).uniform(0, 1, (400, 2))
    S = np.random.default_rng(7).uniform(2, 3, (400, 2))
    for det in ("linear", "gmm"):
        assert detection_auc(R, S, det) >= 0.99


def test_detection_row_order_and_swap():
    R, S = _gauss(300, 8), _gauss(300, 9, shift=0.3)
    auc = detection_auc(R, S, "linear", seed=2)
    perm = np.random.default_rng(10).permutation(300)
    assert detection_auc(R[perm], S[perm[::-1]], "linear", seed=2) == auc
    # the detector's sign flips with the labels, so swapping the roles keeps the AUC
    assert detection_auc(S, R, "linear", seed=2) == pytest.approx(auc, abs=1e-9)


# -- utility

def _labeled(n, seed):
    rng = np.random.default_rng(seed)
    x1, x2 = rng.normal(0, 1, n), rng.normal(0, 1, n)
    y = np.where(x1 + x2 > 0, "yes", "no")
    schema = static_schema(("x1", Continuous(-6.0, 6.0)), ("x2", Continuous(-6.0, 6.0)),
                           ("y", Categorical(("no", "yes"))))
    return Dataset(schema, {"x1": np.clip(x1, -6, 6), "x2": np.clip(x2, -6, 6), "y": y})


def test_tstr_identity():
    train, test = _labeled(500, 0), _labeled(500, 1)
    res = utility_tstr(train, test, train, TaskSpec("y", "classification"))
    assert res.synthetic_score == res.real_baseline_score


def test_tstr_independent_synth_loses_signal():
    # a classifier fit on signal-free rows points in a random direction, so a
    # single run's AUC can land anywhere in [0, 1]; only its average is 0.5
    seeds = 40
    synth_auc = []
    for s in range(seeds):
        train, test = _labeled(2000, 2 * s), _labeled(2000, 2 * s + 1)
        synth = generate(fit("marginal", train), 2000, seed=s)
        res = utility_tstr(train, test, synth, TaskSpec("y", "classification"))
        assert res.real_baseline_score >= 0.95
        synth_auc.append(res.synthetic_score)
    # sd of a [0, 1] variable is at most 0.5
    assert abs(np.mean(synth_auc) - 0.5) <= 3 * 0.5 / np.sqrt(seeds)


def _linear(n, seed):
    rng = np.random.default_rng(seed)
    x = rng.uniform(-2, 2, n)
    y = 2 * x + 1 + rng.normal(0, 1, n)
    schema = static_schema(("x", Continuous(-2.0, 2.0)), ("y", Continuous(-15.0, 15.0)))
    return Dataset(schema, {"x": x, "y": np.clip(y, -15, 15)})


def test_tstr_regression_within_twice_baseline():
    train, test = _linear(10_000, 5), _linear(5000, 6)
    synth = generate(fit("bayes_net", train), 10_000, seed=7)
    res = utility_tstr(train, test, synth, TaskSpec("y", "regression"))
    assert res.synthetic_score <= 2 * res.real_baseline_score


# -- privacy

def test_two_classes_of_two():
    synth_keys = [("a",), ("a",), ("b",), ("b",)]
    synth_sens = ["x", "y", "x", "y"]
    assert k_anonymity(synth_keys) == 2
    assert l_diversity(synth_keys, synth_sens) == 2
    cap = correct_attribution_probability([("a",)], ["x"], [("a",), ("a",)], ["x", "x"])
    assert cap == 1.0


def test_all_unique_quasi_identifiers():
    keys = [(i,) for i in range(10)]
    assert k_anonymity(keys) == 1
    assert k_map(keys, keys) == 1


def test_identifiability_of_exact_copy():
    R = _gauss(200, 11, d=3)
    assert identifiability(R, R.copy()) == 1.0


@given(st.integers(0, 10_000), st.integers(5, 40))
def test_counts_non_increasing_with_more_qis(seed, n):
    rng = np.random.default_rng(seed)
    cols = {c: rng.choice(["p", "q", "r"], n) for c in ("q1", "q2", "q3", "s")}
    ds = Dataset(static_schema(*((c, Categorical(("p", "q", "r"))) for c in cols)), cols)
    ks, ls = [], []
    for j in range(1, 4):
        _, keys = qi_keys(ds, ds, ["q1", "q2", "q3"][:j])
        ks.append(k_anonymity(keys))
        ls.append(l_diversity(keys, list(ds["s"])))
    assert ks == sorted(ks, reverse=True) and ls == sorted(ls, reverse=True)


# -- reports

def test_directions():
    assert direction_of("detection_auc_linear") == Direction("target", 0.5)
    assert direction_of("identifiability") == Direction("lower")
    assert direction_of("tstr_auc") == Direction("higher")
    with pytest.raises(UnknownMetricError):
        direction_of("accuracy")


def test_full_report_is_finite():
    real, train = mixed(400, 0), mixed(400, 1)
    synth = generate(fit("bayes_net", train), 400, seed=2)
    config = EvalConfig(quasi_identifiers=("g", "k"), sensitive=("x",), task=TaskSpec("g", "classification"))
    report = evaluate(real, synth, config, Metadata(), real_train=train)
    values = report.as_dict()
    assert {"js_distance", "mmd", "k_anonymity", "tstr_auc"} <= set(values)
    assert all(math.isfinite(v) for v in values.values())
