import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tabsynth.errors import DegenerateSampleError, NoEventsError, ParameterError
from tabsynth.numeric import (
    Histogram,
    RngStream,
    concordance_index,
    cox_objective,
    empirical_w1,
    exponential_mechanism,
    f_divergences,
    fit_cox,
    fit_glm,
    glm_objective,
    kaplan_meier,
    km_distance,
    ks_statistic,
    laplace_sample,
    mmd_rbf,
    mutual_information,
)

samples = st.lists(st.floats(-1e3, 1e3, allow_nan=False), min_size=1, max_size=40)


# -- Wasserstein / KS

def test_w1_examples():
    assert empirical_w1([0, 0], [1, 1]) == 1.0
    assert empirical_w1([3, 1, 2], [3, 1, 2]) == 0.0
    assert empirical_w1([0, 1, 2], [5, 6, 7]) == 5.0


def test_w1_unequal_sizes():
    # CDF difference: 1/2 on [0, 1), then 0 -> area 0.5
    assert empirical_w1([0, 1], [1]) == pytest.approx(0.5)


@given(samples, samples, st.floats(-100, 100))
def test_w1_properties(a, b, c):
    assert empirical_w1(a, b) == pytest.approx(empirical_w1(b, a), abs=1e-9)
    assert empirical_w1(a, a) == 0.0
    shifted = empirical_w1(np.add(a, c), np.add(b, c))
    assert shifted == pytest.approx(empirical_w1(a, b), abs=1e-9 * (1 + abs(c) + max(map(abs, a + b))))


def test_ks_examples():
    assert ks_statistic([1, 2, 3], [1, 2, 3]) == 0.0
    assert ks_statistic([1, 2], [5, 6]) == 1.0
    assert ks_statistic([1, 2, 3, 4], [2, 3, 4, 5]) == 0.25


@given(samples, samples)
def test_ks_range_and_monotone_invariance(a, b):
    d = ks_statistic(a, b)
    assert 0.0 <= d <= 1.0
    assert ks_statistic(np.arctan(np.divide(a, 100)), np.arctan(np.divide(b, 100))) == pytest.approx(d)


# -- histogram divergences

def test_f_divergence_examples():
    h = Histogram((0, 1), [0.5, 0.5])
    assert f_divergences(h, h) == (0.0, 0.0)
    d = f_divergences(Histogram((0, 1), [1, 0]), Histogram((0, 1), [0, 1]))
    assert d.js_distance == 1.0
    d = f_divergences(Histogram((0, 1), [0.5, 0.5]), Histogram((0, 1), [0.9, 0.1]))
    # hand evaluation of the two-bin sums (JS in bits, KL in nats)
    assert d.js_distance == pytest.approx(0.38313587985994224, abs=1e-12)
    assert d.kl == pytest.approx(0.5108256237659907, abs=1e-7)


@given(st.lists(st.integers(0, 20), min_size=3, max_size=3), st.lists(st.integers(0, 20), min_size=3, max_size=3))
def test_f_divergence_properties(p, q):
    if sum(p) == 0 or sum(q) == 0:
        return
    hp, hq = Histogram((0, 1, 2), p), Histogram((0, 1, 2), q)
    a, b = f_divergences(hp, hq), f_divergences(hq, hp)
    assert a.js_distance == pytest.approx(b.js_distance)
    assert 0.0 <= a.js_distance <= 1.0 and a.kl >= 0.0
    if np.allclose(hp.masses, hq.masses):
        assert a.js_distance == pytest.approx(0.0, abs=1e-7)


# -- MMD

def _mmd_brute(A, B, h):
    k = lambda x, y: np.exp(-np.sum((x - y) ** 2) / (2 * h * h))  # noqa: E731
    n, m = len(A), len(B)
    aa = sum(k(A[i], A[j]) for i in range(n) for j in range(n) if i != j) / (n * (n - 1))
    bb = sum(k(B[i], B[j]) for i in range(m) for j in range(m) if i != j) / (m * (m - 1))
    ab = sum(k(A[i], B[j]) for i in range(n) for j in range(m)) / (n * m)
    return aa + bb - 2 * ab


def test_mmd_identity_and_shift():
    rng = np.random.default_rng(0)
    A = rng.normal(size=(50, 2))
    assert mmd_rbf(A, A.copy()).value == pytest.approx(0.0, abs=1e-9)
    A = rng.normal(0, 1, (200, 1))
    B = rng.normal(10, 1, (200, 1))
    res = mmd_rbf(A, B)
    assert res.value > 0.5
    assert res.raw == pytest.approx(_mmd_brute(A, B, res.bandwidth), rel=1e-9)


def test_mmd_degenerate():
    with pytest.raises(DegenerateSampleError):
        mmd_rbf([[0.0]], [[1.0], [2.0]])


def test_mmd_permutation_null():
    rng = np.random.default_rng(3)
    pooled = rng.normal(size=(60, 2))
    raws = []
    for _ in range(200):
        perm = rng.permutation(60)
        raws.append(mmd_rbf(pooled[perm[:30]], pooled[perm[30:]], bandwidth=1.0).raw)
    raws = np.asarray(raws)
    assert abs(raws.mean()) <= 3 * raws.std(ddof=1) / np.sqrt(len(raws))


# -- mutual information

def test_mutual_information():
    rng = np.random.default_rng(1)
    x = rng.integers(0, 2, 100_000)
    assert mutual_information(x, x) == pytest.approx(1.0, abs=0.01)
    assert mutual_information(rng.integers(0, 4, 10_000), rng.integers(0, 4, 10_000)) <= 0.01
    assert mutual_information(np.zeros(50), rng.integers(0, 3, 50)) == 0.0


# -- GLM

def _fd_check(fun, theta, h=1e-6):
    _, g = fun(theta)
    num = np.array([(fun(theta + h * e)[0] - fun(theta - h * e)[0]) / (2 * h) for e in np.eye(theta.size)])
    return np.linalg.norm(g - num) / max(np.linalg.norm(g), np.linalg.norm(num), 1e-12)


def test_linear_exact():
    x = np.linspace(-1, 1, 30)
    m = fit_glm(x, 2 * x + 1, "linear", l2=0.0)
    assert m.coef[0] == pytest.approx(2.0, abs=1e-6)
    assert m.intercept == pytest.approx(1.0, abs=1e-6)


def test_logistic_separated_stays_finite():
    x = np.r_[-np.arange(1, 21), np.arange(1, 21)].astype(float)
    y = (x > 0).astype(float)
    m = fit_glm(x, y, "logistic", l2=0.1)
    assert np.all(np.isfinite(m.coef))
    assert np.all(np.diff(m.loss_path) <= 1e-15)


@pytest.mark.parametrize("family", ["linear", "logistic"])
def test_glm_gradient(family):
    rng = np.random.default_rng(5)
    X = rng.normal(size=(80, 3))
    y = (rng.random(80) < 0.4).astype(float) if family == "logistic" else rng.normal(size=80)
    for _ in range(5):
        theta = rng.normal(size=4)
        assert _fd_check(lambda t: glm_objective(t, X, y, family, 0.3, hessian=False), theta) <= 1e-5


def test_cox_gradient_and_hr2():
    rng = np.random.default_rng(7)
    n = 5000
    x = rng.integers(0, 2, n).astype(float)
    t = rng.exponential(1 / np.where(x == 1, 2.0, 1.0))
    e = np.ones(n, dtype=int)
    m = fit_cox(x, t, e)
    assert m.coef[0] == pytest.approx(np.log(2), abs=0.1)
    assert np.all(np.diff(m.loss_path) <= 1e-15)
    X = rng.normal(size=(60, 2))
    tt = rng.exponential(size=60)
    ee = (rng.random(60) < 0.7).astype(int)
    for _ in range(5):
        b = rng.normal(size=2)
        assert _fd_check(lambda v: cox_objective(v, X, tt, ee, 0.2, hessian=False), b) <= 1e-5


def test_cox_no_events():
    with pytest.raises(NoEventsError):
        fit_cox(np.arange(4.0), [1, 2, 3, 4], [0, 0, 0, 0])


# -- survival curves

def test_kaplan_meier_examples():
    s = kaplan_meier([1, 2, 3, 4], [1, 1, 1, 1])
    assert s(2.5) == pytest.approx(0.5)
    s = kaplan_meier([1, 2, 3], [0, 0, 0])
    assert s(0.5) == 1.0 and s(10) == 1.0
    s = kaplan_meier([1, 2, 3], [1, 0, 1])
    assert s(1.5) == pytest.approx(2 / 3)
    assert s(3) == pytest.approx(0.0)


@given(st.lists(st.tuples(st.floats(0.01, 100), st.integers(0, 1)), min_size=1, max_size=40))
def test_kaplan_meier_monotone(pairs):
    t, e = zip(*pairs)
    s = kaplan_meier(t, e)
    grid = np.linspace(0, 101, 60)
    vals = np.array([s(g) for g in grid])
    assert vals[0] == 1.0
    assert np.all(np.diff(vals) <= 1e-15)


def test_km_distance_zero_on_identity():
    s = kaplan_meier([1, 2, 5], [1, 0, 1])
    assert km_distance(s, s) == 0.0


def test_concordance_ties():
    assert concordance_index(np.zeros(5), [1, 2, 3, 4, 5], [1, 1, 1, 1, 1]) == 0.5
    assert concordance_index([5, 4, 3, 2, 1], [1, 2, 3, 4, 5], [1, 1, 1, 1, 1]) == 1.0


# -- DP primitives and RNG

def test_laplace_variance():
    x = laplace_sample(1.0, RngStream(0), 1_000_000)
    assert x.var() == pytest.approx(2.0, abs=0.02)
    with pytest.raises(ParameterError):
        laplace_sample(0.0, 0)


def test_exponential_mechanism():
    assert exponential_mechanism(["only"], [3.0], 1.0, 1.0, 0) == "only"
    rng = np.random.default_rng(11)
    picks = [exponential_mechanism(("a", "b"), (1.0, 0.0), 1.0, 1.0, rng) for _ in range(100_000)]
    ratio = picks.count("a") / picks.count("b")
    assert ratio == pytest.approx(np.exp(0.5), rel=0.03)


def test_rng_streams():
    a = RngStream(4, 1).generator().random(5)
    assert np.array_equal(a, RngStream(4, 1).generator().random(5))
    assert not np.array_equal(a, RngStream(4, 2).generator().random(5))
