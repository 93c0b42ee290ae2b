"""Fidelity: per-column divergences plus joint-space two-sample statistics."""
from __future__ import annotations

import warnings

import numpy as np
from scipy.stats import rankdata

from .. import _kernels
from ..data import Categorical, Dataset, EncodingMap
from ..data.transforms import fit_bins
from ..errors import ConfigError, SchemaMismatchError, SizeError
from ..numeric import (
    Histogram,
    empirical_w1,
    f_divergences,
    fit_glm,
    kaplan_meier,
    km_distance,
    ks_statistic,
    mmd_rbf,
)
from .report import EvalConfig, MetricReport

GMM_COMPONENTS = range(1, 6)


def check_pair(real: Dataset, synth: Dataset) -> None:
    if real.schema.fingerprint() != synth.schema.fingerprint():
        raise SchemaMismatchError("real and synthetic data have different schemas")
    if real.n_rows == 0 or synth.n_rows == 0:
        raise SizeError("both datasets must be non-empty")


def _numeric_columns(ds: Dataset) -> list[str]:
    return [c for c in ds.schema.columns if not isinstance(ds.schema.kind(c), Categorical)]


def column_histograms(real: Dataset, synth: Dataset, name: str, bins: int) -> tuple[Histogram, Histogram]:
    """Histograms of one column on bins fitted to the real data."""
    fb = fit_bins(real.schema[name], real[name], bins)
    return (Histogram.from_codes(fb.codes(real[name]), fb.n_bins, fb.labels),
            Histogram.from_codes(fb.codes(synth[name]), fb.n_bins, fb.labels))


def marginal_divergences(real: Dataset, synth: Dataset, bins: int = 10) -> dict[str, float]:
    """Mean per-column JS distance and smoothed KL(real || synth)."""
    js, kl = [], []
    for c in real.schema.columns:
        d = f_divergences(*column_histograms(real, synth, c, bins))
        js.append(d.js_distance)
        kl.append(d.kl)
    return {"js_distance": float(np.mean(js)), "kl_divergence": float(np.mean(kl))}


def scaled_column(ds: Dataset, name: str) -> np.ndarray:
    kind = ds.schema.kind(name)
    span = kind.upper - kind.lower
    x = np.asarray(ds[name], dtype=np.float64)
    return (x - kind.lower) / span if span > 0 else x - kind.lower


def mean_w1(real: Dataset, synth: Dataset) -> float:
    return float(np.mean([empirical_w1(scaled_column(real, c), scaled_column(synth, c))
                          for c in _numeric_columns(real)]))


def mean_ks(real: Dataset, synth: Dataset) -> float:
    return float(np.mean([ks_statistic(real[c], synth[c]) for c in _numeric_columns(real)]))


def prdc(real_encoded, synth_encoded, k: int = 5) -> tuple[float, float, float, float]:
    """Precision, recall, density and coverage from k-NN balls (a point on a ball's boundary is inside)."""
    R = np.asarray(real_encoded, dtype=np.float64)
    S = np.asarray(synth_encoded, dtype=np.float64)
    if k < 1:
        raise ConfigError("k must be at least 1")
    if R.shape[0] <= k or S.shape[0] <= k:
        raise SizeError(f"PRDC with k={k} needs more than {k} points per set")
    r_real = _kernels.kth_neighbor_sq(R, k)
    r_synth = _kernels.kth_neighbor_sq(S, k)
    in_real, real_in_synth, covered = _kernels.prdc_counts(R, S, r_real, r_synth)
    precision = float(np.mean(in_real > 0))
    recall = float(np.mean(real_in_synth))
    density = float(np.sum(in_real) / (k * S.shape[0]))
    coverage = float(np.mean(covered))
    return precision, recall, density, coverage


def alpha_precision(real_encoded, synth_encoded, alpha_grid=tuple(round(0.1 * i, 1) for i in range(1, 10))) -> float:
    """Mean |fraction of synthetic points inside the real alpha-ball - alpha| over the grid."""
    R = np.asarray(real_encoded, dtype=np.float64)
    S = np.asarray(synth_encoded, dtype=np.float64)
    if R.shape[0] == 0 or S.shape[0] == 0:
        raise SizeError("alpha-precision needs non-empty sets")
    center = R.mean(axis=0)
    d_real = np.sqrt(((R - center) ** 2).sum(axis=1))
    d_synth = np.sqrt(((S - center) ** 2).sum(axis=1))
    alphas = np.asarray(alpha_grid, dtype=np.float64)
    radii = np.quantile(d_real, alphas)
    curve = (d_synth[None, :] <= radii[:, None]).mean(axis=1)
    return float(np.mean(np.abs(curve - alphas)))


def auc_score(labels, scores) -> float:
    """Area under the ROC curve via the rank-sum identity; tied scores count one half."""
    labels = np.asarray(labels, dtype=bool)
    n1 = int(labels.sum())
    n0 = labels.size - n1
    if n0 == 0 or n1 == 0:
        raise SizeError("AUC needs both classes")
    ranks = rankdata(np.asarray(scores, dtype=np.float64))
    return float((ranks[labels].sum() - n1 * (n1 + 1) / 2) / (n0 * n1))


def _canonical(X: np.ndarray) -> np.ndarray:
    """Rows in a content-defined order so results do not depend on input row order."""
    if X.shape[1] == 0:
        return X
    return X[np.lexsort(X.T[::-1])]


def _fold_ids(n: int, folds: int, seed: int) -> np.ndarray:
    return np.random.default_rng(seed).permutation(n) % folds


def _gmm_scores(train: np.ndarray, test: np.ndarray, seed: int) -> np.ndarray:
    from sklearn.mixture import GaussianMixture

    best, best_bic = None, np.inf
    for c in GMM_COMPONENTS:
        if c > train.shape[0]:
            break
        g = GaussianMixture(c, covariance_type="diag", random_state=seed, reg_covar=1e-6)
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            g.fit(train)
        bic = g.bic(train)
        if bic < best_bic:
            best, best_bic = g, bic
    return -best.score_samples(test)


def detection_auc(real_encoded, synth_encoded, detector: str = "linear", folds: int = 5, seed: int = 0) -> float:
    """Cross-validated AUC of a real (0) vs synthetic (1) discriminator.

    Folds are stratified: each set is put in canonical row order and gets
    its own fold assignment from a generator seeded with ``seed``. The
    linear detector is a logistic GLM; the GMM detector scores by negative
    log-likelihood under a mixture fit on the real training rows only.
    Returns the mean AUC over folds.
    """
    if detector not in ("linear", "gmm"):
        raise ConfigError(f"unknown detector {detector!r}")
    R = _canonical(np.asarray(real_encoded, dtype=np.float64))
    S = _canonical(np.asarray(synth_encoded, dtype=np.float64))
    if R.shape[0] < folds or S.shape[0] < folds:
        raise SizeError(f"detection with {folds} folds needs at least {folds} rows per set")
    fr, fs = _fold_ids(R.shape[0], folds, seed), _fold_ids(S.shape[0], folds, seed)
    aucs = []
    for f in range(folds):
        r_tr, r_te, s_tr, s_te = R[fr != f], R[fr == f], S[fs != f], S[fs == f]
        if detector == "linear":
            X = np.vstack([r_tr, s_tr])
            y = np.concatenate([np.zeros(len(r_tr)), np.ones(len(s_tr))])
            model = fit_glm(X, y, "logistic")
            scores = model.decision(np.vstack([r_te, s_te]))
        else:
            scores = _gmm_scores(r_tr, np.vstack([r_te, s_te]), seed)
        labels = np.concatenate([np.zeros(len(r_te)), np.ones(len(s_te))])
        aucs.append(auc_score(labels, scores))
    return float(np.mean(aucs))


def fidelity_suite(real: Dataset, synth: Dataset, config: EvalConfig | None = None) -> MetricReport:
    """Every fidelity metric applicable to the pair."""
    config = config or EvalConfig()
    check_pair(real, synth)
    report = MetricReport(provenance={"seed": config.seed, "config": config.digest()})
    want = config.wants
    if want("js_distance") or want("kl_divergence"):
        div = marginal_divergences(real, synth, config.bins)
        for name in ("js_distance", "kl_divergence"):
            if want(name):
                report.add(name, div[name])
    numeric = _numeric_columns(real)
    for name, fn in (("wasserstein1", mean_w1), ("ks_statistic", mean_ks)):
        if want(name):
            if numeric:
                report.add(name, fn(real, synth))
            else:
                report.notice(f"{name} skipped: no numeric columns")
    enc = EncodingMap.from_schema(real.schema)
    R, S = enc.transform(real), enc.transform(synth)
    if want("mmd"):
        if len(R) >= 2 and len(S) >= 2:
            report.add("mmd", mmd_rbf(R, S).value)
        else:
            report.notice("mmd skipped: fewer than 2 rows")
    prdc_names = ("prdc_precision", "prdc_recall", "prdc_density", "prdc_coverage")
    if any(want(n) for n in prdc_names):
        if len(R) > config.k and len(S) > config.k:
            for name, v in zip(prdc_names, prdc(R, S, config.k)):
                if want(name):
                    report.add(name, v)
        else:
            report.notice(f"prdc skipped: needs more than k={config.k} rows per set")
    if want("alpha_precision_delta"):
        report.add("alpha_precision_delta", alpha_precision(R, S, config.alpha_grid))
    if want("km_distance") and real.schema.censored is not None:
        pair = real.schema.censored.kind
        report.add("km_distance", km_distance(kaplan_meier(real[pair.time], real[pair.event]),
                                              kaplan_meier(synth[pair.time], synth[pair.event])))
    for det in ("linear", "gmm"):
        name = f"detection_auc_{det}"
        if want(name):
            if len(R) >= config.folds and len(S) >= config.folds:
                report.add(name, detection_auc(R, S, det, config.folds, config.seed))
            else:
                report.notice(f"{name} skipped: fewer rows than folds")
    return report
