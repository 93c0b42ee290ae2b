"""Distances between samples and between histograms."""
from __future__ import annotations

from dataclasses import dataclass
from typing import NamedTuple

import numpy as np
from scipy.spatial.distance import pdist

from .. import _kernels
from ..errors import (
    BinMismatchError,
    DegenerateSampleError,
    DimensionMismatchError,
    EmptySampleError,
    LengthMismatchError,
)

KL_SMOOTHING = 1e-9


def _sample(x, name: str) -> np.ndarray:
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.size == 0:
        raise EmptySampleError(f"sample {name} is empty")
    return x


def empirical_w1(a, b) -> float:
    """Exact 1-D Wasserstein-1 distance between two empirical distributions."""
    a, b = np.sort(_sample(a, "a")), np.sort(_sample(b, "b"))
    if a.size == b.size:
        return float(np.mean(np.abs(a - b)))
    support = np.sort(np.concatenate([a, b]))
    widths = np.diff(support)
    fa = np.searchsorted(a, support[:-1], side="right") / a.size
    fb = np.searchsorted(b, support[:-1], side="right") / b.size
    return float(np.sum(np.abs(fa - fb) * widths))


def ks_statistic(a, b) -> float:
    """Sup-norm distance between the two empirical CDFs."""
    a, b = np.sort(_sample(a, "a")), np.sort(_sample(b, "b"))
    support = np.concatenate([a, b])
    fa = np.searchsorted(a, support, side="right") / a.size
    fb = np.searchsorted(b, support, side="right") / b.size
    return float(np.max(np.abs(fa - fb)))


@dataclass(frozen=True)
class Histogram:
    """Normalized masses over bins; ``bins`` is an edge vector or a category tuple."""

    bins: tuple
    masses: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.masses, dtype=np.float64)
        if np.any(m < 0):
            raise ValueError("histogram masses must be non-negative")
        total = m.sum()
        if total <= 0:
            raise EmptySampleError("histogram has no mass")
        object.__setattr__(self, "masses", m / total)
        object.__setattr__(self, "bins", tuple(self.bins))

    @classmethod
    def from_codes(cls, codes, n_bins: int, bins=None) -> Histogram:
        counts = np.bincount(np.asarray(codes, dtype=np.int64), minlength=n_bins)
        return cls(tuple(range(n_bins)) if bins is None else bins, counts)


class Divergences(NamedTuple):
    js_distance: float
    kl: float


def f_divergences(p: Histogram, q: Histogram) -> Divergences:
    """Jensen-Shannon distance (base 2, in [0, 1]) and smoothed KL(p || q)."""
    if p.bins != q.bins or p.masses.shape != q.masses.shape:
        raise BinMismatchError("histograms have different bin structures")
    pm, qm = p.masses, q.masses
    mid = 0.5 * (pm + qm)
    with np.errstate(divide="ignore", invalid="ignore"):
        tp = np.where(pm > 0, pm * np.log2(pm / mid), 0.0)
        tq = np.where(qm > 0, qm * np.log2(qm / mid), 0.0)
    js = 0.5 * (tp.sum() + tq.sum())
    js_distance = float(np.sqrt(min(max(js, 0.0), 1.0)))
    ps = (pm + KL_SMOOTHING) / (1.0 + KL_SMOOTHING * pm.size)
    qs = (qm + KL_SMOOTHING) / (1.0 + KL_SMOOTHING * qm.size)
    kl = float(max(np.sum(ps * np.log(ps / qs)), 0.0))
    return Divergences(js_distance, kl)


class MmdResult(NamedTuple):
    value: float  # max(raw, 0)
    raw: float  # unbiased estimate of MMD^2, may be negative
    bandwidth: float


def median_heuristic(X) -> float:
    d = pdist(np.asarray(X, dtype=np.float64))
    med = float(np.median(d)) if d.size else 0.0
    return med if med > 0 else 1.0


def mmd_rbf(A, B, bandwidth: float | None = None) -> MmdResult:
    """Unbiased squared MMD with a Gaussian kernel.

    The default bandwidth is the median pairwise distance over the pooled
    sample (1.0 if that median is zero).
    """
    A = np.atleast_2d(np.asarray(A, dtype=np.float64))
    B = np.atleast_2d(np.asarray(B, dtype=np.float64))
    if A.shape[1] != B.shape[1]:
        raise DimensionMismatchError(f"dimensions differ: {A.shape[1]} vs {B.shape[1]}")
    n, m = A.shape[0], B.shape[0]
    if n < 2 or m < 2:
        raise DegenerateSampleError("the unbiased MMD estimator needs at least 2 points per set")
    if bandwidth is None:
        bandwidth = median_heuristic(np.vstack([A, B]))
    elif bandwidth <= 0:
        raise ValueError("bandwidth must be positive")
    gamma = 1.0 / (2.0 * bandwidth * bandwidth)
    kaa = _kernels.rbf_sum(A, A, gamma, True) / (n * (n - 1))
    kbb = _kernels.rbf_sum(B, B, gamma, True) / (m * (m - 1))
    kab = _kernels.rbf_sum(A, B, gamma, False) / (n * m)
    raw = float(kaa + kbb - 2.0 * kab)
    return MmdResult(max(raw, 0.0), raw, float(bandwidth))


def _codes(x) -> tuple[np.ndarray, int]:
    _, inv = np.unique(np.asarray(x), return_inverse=True)
    inv = inv.reshape(-1).astype(np.int64)
    return inv, int(inv.max()) + 1 if inv.size else 0


def entropy_bits(codes, n_bins: int | None = None) -> float:
    codes = np.asarray(codes, dtype=np.int64)
    p = np.bincount(codes, minlength=n_bins or 0) / codes.size
    p = p[p > 0]
    return float(-(p * np.log2(p)).sum())


def mutual_information_codes(x: np.ndarray, y: np.ndarray, kx: int, ky: int) -> float:
    """Plug-in MI in bits from integer codes in [0, kx) and [0, ky)."""
    n = x.size
    if n == 0:
        return 0.0
    joint = _kernels.contingency(x, y, kx, ky).astype(np.float64) / n
    px = joint.sum(axis=1, keepdims=True)
    py = joint.sum(axis=0, keepdims=True)
    nz = joint > 0
    mi = np.sum(joint[nz] * np.log2(joint[nz] / (px @ py)[nz]))
    return float(max(mi, 0.0))


def mutual_information(x, y) -> float:
    """Plug-in mutual information (bits) between two discrete samples."""
    x, y = np.asarray(x).reshape(-1), np.asarray(y).reshape(-1)
    if x.size != y.size:
        raise LengthMismatchError(f"lengths differ: {x.size} vs {y.size}")
    cx, kx = _codes(x)
    cy, ky = _codes(y)
    return mutual_information_codes(cx, cy, kx, ky)
