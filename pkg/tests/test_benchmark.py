import json

import pytest
from conftest import ar_series, chain, mixed

from tabsynth.benchmark import (
    BenchmarkConfig,
    BenchmarkReport,
    Cell,
    DatasetSpec,
    PluginSpec,
    derive_seeds,
    rank_plugins,
    run_benchmark,
)
from tabsynth.errors import ConfigError
from tabsynth.metrics import EvalConfig
from tabsynth.metrics.report import FIDELITY_METRICS

SEEDS = 20


@pytest.fixture(scope="module")
def chain_rankings():
    """Best plugin per metric for 20 correlated binary chains, marginal vs bayes_net."""
    out = []
    for s in range(SEEDS):
        ds = chain(2000, s, names=("a", "b", "c", "d"))
        cfg = BenchmarkConfig([DatasetSpec("chain", ds)], [PluginSpec("marginal"), PluginSpec("bayes_net")],
                              EvalConfig(metrics=("js_distance", "mmd")), repeats=3, seed=s)
        report = run_benchmark(cfg)
        out.append({m: rank_plugins(report, m, "chain")[0] for m in ("js_distance", "mmd")})
    return out


def test_grid_shape_and_directions():
    cfg = BenchmarkConfig([DatasetSpec("mixed", mixed(300))], [PluginSpec("marginal"), PluginSpec("bayes_net")],
                          repeats=3, seed=1)
    report = run_benchmark(cfg)
    assert len(report.cells) == 6 and all(c.status == "ok" for c in report.cells)
    expected = {m for m in FIDELITY_METRICS if m != "km_distance"}
    for c in report.cells:
        assert expected <= set(c.metrics)
    assert {s["n"] for s in report.summary()} == {3}


def test_bayes_net_wins_on_joint_metric(chain_rankings):
    assert sum(r["mmd"] == "bayes_net" for r in chain_rankings) >= 18


@pytest.mark.xfail(strict=True, reason="mean JS compares per-column marginals, which both plugins reproduce")
def test_bayes_net_wins_on_mean_js(chain_rankings):
    assert sum(r["js_distance"] == "bayes_net" for r in chain_rankings) >= 15


def test_single_repeat_has_zero_std():
    cfg = BenchmarkConfig([DatasetSpec("mixed", mixed(200))], [PluginSpec("marginal")],
                          EvalConfig(metrics=("js_distance", "wasserstein1")), repeats=1)
    assert all(s["std"] == 0.0 for s in run_benchmark(cfg).summary())


def test_modality_mismatch_is_skipped():
    cfg = BenchmarkConfig([DatasetSpec("mixed", mixed(200)), DatasetSpec("series", ar_series(20, 6))],
                          [PluginSpec("marginal"), PluginSpec("prob_ar")],
                          EvalConfig(metrics=("js_distance",)))
    status = {(c.dataset, c.plugin): c.status for c in run_benchmark(cfg).cells}
    assert status == {("mixed", "marginal"): "ok", ("mixed", "prob_ar"): "skipped",
                      ("series", "marginal"): "skipped", ("series", "prob_ar"): "ok"}


def _report(metric, direction, means):
    cells = [Cell("d", p, 0, 0, "ok", "", {metric: v}, {metric: direction}) for p, v in means.items()]
    return BenchmarkReport(cells, {})


def test_ranking_rules():
    assert rank_plugins(_report("mmd", "lower-better", {"p1": 0.1, "p2": 0.2}), "mmd", "d") == ["p1", "p2"]
    assert rank_plugins(_report("mmd", "lower-better", {"zeta": 0.1, "alpha": 0.1}), "mmd", "d") == ["alpha", "zeta"]
    auc = _report("detection_auc_linear", "target(0.5)", {"far": 0.7, "near": 0.55})
    assert rank_plugins(auc, "detection_auc_linear", "d") == ["near", "far"]
    high = _report("prdc_recall", "higher-better", {"a": 0.3, "b": 0.9})
    assert rank_plugins(high, "prdc_recall", "d") == ["b", "a"]


def test_seed_derivation():
    seeds = derive_seeds(7, 5)
    assert len(set(seeds)) == 5 and derive_seeds(7, 5) == seeds
    assert derive_seeds(7, 3) == seeds[:3]
    assert derive_seeds(8, 5) != seeds


def test_report_is_deterministic_json():
    cfg = BenchmarkConfig([DatasetSpec("mixed", mixed(150))], [PluginSpec("bayes_net")],
                          EvalConfig(metrics=("js_distance", "mmd")), repeats=2, seed=3)
    a, b = run_benchmark(cfg).canonical_json(), run_benchmark(cfg).canonical_json()
    assert a == b and "timestamp" not in json.loads(a)


def test_bad_configs():
    with pytest.raises(ConfigError):
        BenchmarkConfig([DatasetSpec("m", mixed(50))], [PluginSpec("marginal")], repeats=0)
    with pytest.raises(ConfigError):
        BenchmarkConfig([], [PluginSpec("marginal")])
    with pytest.raises(ConfigError):
        BenchmarkConfig.from_dict({"datasets": [], "plugins": [], "colour": 1})
