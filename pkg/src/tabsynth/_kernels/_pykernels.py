"""Numpy implementations of the hot kernels (fallback for the compiled module)."""
import numpy as np

_CHUNK = 1 << 22  # matrix entries per block


def _blocks(n_rows, n_cols):
    step = max(1, _CHUNK // max(n_cols, 1))
    for a in range(0, n_rows, step):
        yield a, min(n_rows, a + step)


def sq_dists(A, B, weights=None):
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    if weights is not None:
        w = np.sqrt(np.asarray(weights, dtype=np.float64))
        A, B = A * w, B * w
    out = np.empty((A.shape[0], B.shape[0]))
    for a, b in _blocks(A.shape[0], B.shape[0] * max(A.shape[1], 1)):
        diff = A[a:b, None, :] - B[None, :, :]
        out[a:b] = np.einsum("ijk,ijk->ij", diff, diff)
    return out


def contingency(x, y, kx, ky):
    x = np.asarray(x, dtype=np.int64)
    y = np.asarray(y, dtype=np.int64)
    return np.bincount(x * ky + y, minlength=kx * ky).reshape(kx, ky).astype(np.int64)


def kth_neighbor_sq(X, k):
    """Squared distance from each row to its k-th nearest other row."""
    X = np.ascontiguousarray(X, dtype=np.float64)
    n = X.shape[0]
    out = np.empty(n)
    for a, b in _blocks(n, n * max(X.shape[1], 1)):
        d = sq_dists(X[a:b], X)
        d[np.arange(b - a), np.arange(a, b)] = np.inf
        out[a:b] = np.partition(d, k - 1, axis=1)[:, k - 1]
    return out


def nearest_sq(Q, R, weights=None, exclude_self=False):
    """Squared distance and index of the nearest row of R for each row of Q."""
    Q = np.ascontiguousarray(Q, dtype=np.float64)
    n = Q.shape[0]
    dist = np.empty(n)
    idx = np.empty(n, dtype=np.int64)
    for a, b in _blocks(n, R.shape[0] * max(Q.shape[1], 1)):
        d = sq_dists(Q[a:b], R, weights)
        if exclude_self:
            d[np.arange(b - a), np.arange(a, b)] = np.inf
        j = np.argmin(d, axis=1)
        idx[a:b] = j
        dist[a:b] = d[np.arange(b - a), j]
    return dist, idx


def prdc_counts(R, S, r_real, r_synth):
    """Ball statistics for precision/recall/density/coverage (squared radii).

    Returns (per synthetic point: number of real balls containing it,
    per real point: inside some synthetic ball, per real point: its ball
    contains a synthetic point).
    """
    R = np.ascontiguousarray(R, dtype=np.float64)
    S = np.ascontiguousarray(S, dtype=np.float64)
    in_real = np.zeros(S.shape[0], dtype=np.int64)
    real_in_synth = np.zeros(R.shape[0], dtype=bool)
    covered = np.zeros(R.shape[0], dtype=bool)
    for a, b in _blocks(R.shape[0], S.shape[0] * max(R.shape[1], 1)):
        d = sq_dists(R[a:b], S)
        inside = d <= r_real[a:b, None]
        in_real += inside.sum(axis=0)
        covered[a:b] = inside.any(axis=1)
        real_in_synth[a:b] = (d <= r_synth[None, :]).any(axis=1)
    return in_real, real_in_synth, covered


def rbf_sum(A, B, gamma, skip_diagonal=False):
    """Sum of exp(-gamma * |a - b|^2) over all pairs (optionally i != j)."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    B = np.ascontiguousarray(B, dtype=np.float64)
    total = 0.0
    for a, b in _blocks(A.shape[0], B.shape[0] * max(A.shape[1], 1)):
        k = np.exp(-gamma * sq_dists(A[a:b], B))
        if skip_diagonal:
            k[np.arange(b - a), np.arange(a, b)] = 0.0
        total += k.sum()
    return float(total)


def concordance_counts(times, events, scores):
    """Harrell pair counts: (concordant, discordant, tied-score) over usable pairs."""
    times = np.asarray(times, dtype=np.float64)
    events = np.asarray(events, dtype=np.int64)
    scores = np.asarray(scores, dtype=np.float64)
    conc = disc = tied = 0
    idx = np.flatnonzero(events == 1)
    for a, b in _blocks(len(idx), len(times)):
        rows = idx[a:b]
        usable = times[rows, None] < times[None, :]
        si = scores[rows, None]
        conc += int((usable & (si > scores[None, :])).sum())
        disc += int((usable & (si < scores[None, :])).sum())
        tied += int((usable & (si == scores[None, :])).sum())
    return conc, disc, tied


def sample_categorical(cum, rows, u):
    """Inverse-CDF draw: for draw i pick the first column with cum[rows[i]] > u[i]."""
    c = cum[np.asarray(rows, dtype=np.int64)]
    out = (c <= np.asarray(u)[:, None]).sum(axis=1)
    return np.minimum(out, cum.shape[1] - 1).astype(np.int64)
