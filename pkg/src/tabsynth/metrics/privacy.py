"""Privacy: equivalence-class counts on quasi-identifiers plus distance-based attacks."""
from __future__ import annotations

from collections import Counter, defaultdict

import numpy as np

from .. import _kernels
from ..data import Categorical, Dataset, EncodingMap, Metadata
from ..data.transforms import fit_bins
from ..errors import UnknownFeatureError
from ..numeric import entropy_bits
from .fidelity import check_pair
from .report import EvalConfig, MetricReport


def qi_keys(real: Dataset, synth: Dataset, columns, bins: int = 10) -> tuple[list[tuple], list[tuple]]:
    """Equivalence-class key per row; numeric columns are binned on the real data."""
    columns = list(columns)
    for c in columns:
        if c not in real.schema.columns:
            raise UnknownFeatureError(f"unknown quasi-identifier {c!r}")
    rc, sc = [], []
    for c in columns:
        kind = real.schema.kind(c)
        if isinstance(kind, Categorical):
            rc.append(np.asarray(real[c], dtype=object))
            sc.append(np.asarray(synth[c], dtype=object))
        else:
            fb = fit_bins(real.schema[c], real[c], bins)
            rc.append(fb.codes(real[c]))
            sc.append(fb.codes(synth[c]))
    return list(zip(*rc)) if rc else [], list(zip(*sc)) if sc else []


def k_anonymity(synth_keys) -> int:
    return min(Counter(synth_keys).values())


def l_diversity(synth_keys, synth_sensitive) -> int:
    groups = defaultdict(set)
    for k, s in zip(synth_keys, synth_sensitive):
        groups[k].add(s)
    return min(len(v) for v in groups.values())


def k_map(real_keys, synth_keys) -> int:
    """Smallest number of real records sharing a synthetic record's class (0 allowed)."""
    real_counts = Counter(real_keys)
    return min(real_counts.get(k, 0) for k in set(synth_keys))


def delta_presence(real_keys, synth_keys) -> float:
    """Largest share of real records among all records of one class, over classes present in synth."""
    rc, sc = Counter(real_keys), Counter(synth_keys)
    return max(rc.get(k, 0) / (rc.get(k, 0) + n) for k, n in sc.items())


def correct_attribution_probability(real_keys, real_sensitive, synth_keys, synth_sensitive) -> float:
    """Mean chance of guessing a real record's sensitive value from synthetic records of its class.

    Real records whose class does not occur in synth are not attributable
    and are left out; the result is 0 when no real record is attributable.
    """
    groups = defaultdict(Counter)
    for k, s in zip(synth_keys, synth_sensitive):
        groups[k][s] += 1
    probs = []
    for k, s in zip(real_keys, real_sensitive):
        g = groups.get(k)
        if g:
            probs.append(g[s] / sum(g.values()))
    return float(np.mean(probs)) if probs else 0.0


def _sensitive_codes(real: Dataset, synth: Dataset, name: str, bins: int) -> tuple[list, list]:
    if isinstance(real.schema.kind(name), Categorical):
        return list(real[name]), list(synth[name])
    fb = fit_bins(real.schema[name], real[name], bins)
    return fb.codes(real[name]).tolist(), fb.codes(synth[name]).tolist()


def entropy_weights(real: Dataset, enc: EncodingMap, bins: int = 10) -> np.ndarray:
    """Per encoded coordinate: 1 / entropy (bits) of its real feature; 0 for constant features."""
    w = np.zeros(enc.width)
    for name, sl in enc.slices().items():
        fb = fit_bins(real.schema[name], real[name], bins)
        h = entropy_bits(fb.codes(real[name]), fb.n_bins)
        w[sl] = 1.0 / h if h > 0 else 0.0
    return w


def identifiability(real_encoded, synth_encoded, weights=None) -> float:
    """Fraction of real records strictly closer to some synthetic record than to any other real record."""
    R = np.asarray(real_encoded, dtype=np.float64)
    S = np.asarray(synth_encoded, dtype=np.float64)
    if R.shape[0] < 2:
        return 0.0
    d_rr, _ = _kernels.nearest_sq(R, R, weights, exclude_self=True)
    d_rs, _ = _kernels.nearest_sq(R, S, weights)
    return float(np.mean(d_rs < d_rr))


def nn_reidentification(real_encoded, synth_encoded) -> tuple[float, float]:
    """Linkage attack: real record -> nearest synthetic -> nearest real; success if it returns home.

    Returns the success rate and the 1/n random-guess baseline.
    """
    R = np.asarray(real_encoded, dtype=np.float64)
    S = np.asarray(synth_encoded, dtype=np.float64)
    _, to_synth = _kernels.nearest_sq(R, S)
    _, back = _kernels.nearest_sq(S[to_synth], R)
    return float(np.mean(back == np.arange(R.shape[0]))), 1.0 / R.shape[0]


def privacy_suite(real: Dataset, synth: Dataset, metadata: Metadata | None = None,
                  config: EvalConfig | None = None) -> MetricReport:
    """Every privacy metric whose inputs are available; missing inputs become notices."""
    config = config or EvalConfig()
    metadata = metadata or Metadata()
    check_pair(real, synth)
    report = MetricReport(provenance={"seed": config.seed, "config": config.digest()})
    want = config.wants
    qi = list(config.quasi_identifiers or sorted(metadata.quasi_identifiers))
    sensitive = list(config.sensitive or sorted(metadata.sensitive_features))
    qi_metrics = ("k_anonymity", "l_diversity", "k_map", "delta_presence", "correct_attribution_probability")
    if not qi:
        if any(want(m) for m in qi_metrics):
            report.notice("quasi-identifier metrics skipped: no quasi-identifiers declared")
    else:
        rk, sk = qi_keys(real, synth, qi, config.bins)
        if want("k_anonymity"):
            report.add("k_anonymity", k_anonymity(sk))
        if want("k_map"):
            report.add("k_map", k_map(rk, sk))
        if want("delta_presence"):
            report.add("delta_presence", delta_presence(rk, sk))
        sens = [s for s in sensitive if s not in qi]
        if not sens:
            if want("l_diversity") or want("correct_attribution_probability"):
                report.notice("l-diversity and attribution skipped: no sensitive feature outside the QI set")
        else:
            rs, ss = _sensitive_codes(real, synth, sens[0], config.bins)
            if want("l_diversity"):
                report.add("l_diversity", l_diversity(sk, ss))
            if want("correct_attribution_probability"):
                report.add("correct_attribution_probability", correct_attribution_probability(rk, rs, sk, ss))
    enc = EncodingMap.from_schema(real.schema)
    R, S = enc.transform(real), enc.transform(synth)
    if want("identifiability"):
        report.add("identifiability", identifiability(R, S, entropy_weights(real, enc, config.bins)))
    if want("nn_reid") or want("nn_reid_baseline"):
        rate, baseline = nn_reidentification(R, S)
        if want("nn_reid"):
            report.add("nn_reid", rate)
        if want("nn_reid_baseline"):
            report.add("nn_reid_baseline", baseline)
    return report
