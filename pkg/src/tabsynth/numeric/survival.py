"""Kaplan-Meier curves and the Cox proportional hazards model."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .. import _kernels
from ..errors import LengthMismatchError, NoEventsError, SingularError
from .glm import DEFAULT_L2, GRAD_TOL, MAX_ITER


@dataclass(frozen=True)
class StepFunction:
    """Right-continuous step function equal to ``start`` before the first knot."""

    knots: np.ndarray
    values: np.ndarray
    start: float = 1.0

    def __call__(self, t):
        t = np.asarray(t, dtype=np.float64)
        idx = np.searchsorted(self.knots, t, side="right") - 1
        vals = np.concatenate([[self.start], self.values])
        return vals[idx + 1]


def _pair(times, events):
    times = np.asarray(times, dtype=np.float64).reshape(-1)
    events = np.asarray(events).reshape(-1).astype(np.int64)
    if times.size != events.size:
        raise LengthMismatchError(f"{times.size} times but {events.size} event flags")
    return times, events


def kaplan_meier(times, events) -> StepFunction:
    """Product-limit survival estimate with knots at the distinct event times."""
    times, events = _pair(times, events)
    if times.size == 0:
        raise LengthMismatchError("need at least one observation")
    sorted_t = np.sort(times)
    event_times, deaths = np.unique(times[events == 1], return_counts=True)
    at_risk = times.size - np.searchsorted(sorted_t, event_times, side="left")
    surv = np.cumprod(1.0 - deaths / at_risk)
    return StepFunction(event_times, surv)


def km_distance(a: StepFunction, b: StepFunction) -> float:
    """Mean absolute gap between two survival curves over the union of their knots."""
    knots = np.union1d(a.knots, b.knots)
    if knots.size == 0:
        return 0.0
    return float(np.mean(np.abs(a(knots) - b(knots))))


@dataclass(frozen=True)
class CoxModel:
    coef: np.ndarray
    l2: float
    n_iter: int = 0
    converged: bool = True
    loss_path: tuple = field(default=(), repr=False, compare=False)

    def risk(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.coef.size)
        return X @ self.coef


def cox_objective(beta, X, times, events, l2: float, hessian: bool = True):
    """(Negative Breslow partial log-likelihood + l2/2 * |beta|^2) / n, with derivatives."""
    X = np.asarray(X, dtype=np.float64)
    beta = np.asarray(beta, dtype=np.float64)
    times, events = _pair(times, events)
    n, d = X.shape
    order = np.argsort(times, kind="stable")
    X, t, e = X[order], times[order], events[order]
    eta = X @ beta
    shift = eta.max() if n else 0.0
    w = np.exp(eta - shift)
    # reverse cumulative sums give sums over {j : t_j >= t_i}
    s0 = np.cumsum(w[::-1])[::-1]
    s1 = np.cumsum((w[:, None] * X)[::-1], axis=0)[::-1]
    start = np.searchsorted(t, t, side="left")
    ev = np.flatnonzero(e == 1)
    r0 = s0[start[ev]]
    r1 = s1[start[ev]]
    mean_x = r1 / r0[:, None]
    loss = -np.sum(eta[ev] - shift - np.log(r0)) / n + 0.5 * l2 / n * beta @ beta
    grad = -np.sum(X[ev] - mean_x, axis=0) / n + l2 / n * beta
    if not hessian:
        return float(loss), grad
    s2 = np.cumsum((w[:, None, None] * X[:, :, None] * X[:, None, :])[::-1], axis=0)[::-1]
    r2 = s2[start[ev]]
    H = np.sum(r2 / r0[:, None, None] - mean_x[:, :, None] * mean_x[:, None, :], axis=0) / n
    H = H + l2 / n * np.eye(d)
    return float(loss), grad, H


def fit_cox(X, times, events, l2: float = DEFAULT_L2, seed=None,
            max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> CoxModel:
    """Maximize the Breslow partial likelihood by damped Newton steps."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    times, events = _pair(times, events)
    if X.shape[0] != times.size:
        raise LengthMismatchError(f"X has {X.shape[0]} rows but {times.size} times were given")
    if times.size < 2:
        raise LengthMismatchError("need at least 2 observations")
    if not np.any(events == 1):
        raise NoEventsError("no events observed; the partial likelihood is flat")
    beta = np.zeros(X.shape[1])
    loss, grad, H = cox_objective(beta, X, times, events, l2)
    path = [loss]
    it = 0
    converged = np.linalg.norm(grad) <= tol
    while not converged and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            if l2 == 0:
                raise SingularError("partial-likelihood Hessian is singular") from None
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        for _ in range(40):
            cand = beta - t * step
            cand_loss, _ = cox_objective(cand, X, times, events, l2, hessian=False)
            if cand_loss <= loss:
                break
            t *= 0.5
        else:
            break
        beta = cand
        loss, grad, H = cox_objective(beta, X, times, events, l2)
        path.append(loss)
        converged = np.linalg.norm(grad) <= tol
    return CoxModel(beta, float(l2), it, bool(converged), tuple(path))


def concordance_index(scores, times, events) -> float:
    """Harrell's C: higher score should mean earlier event; score ties count one half."""
    times, events = _pair(times, events)
    conc, disc, tied = _kernels.concordance_counts(times, events, np.asarray(scores, dtype=np.float64))
    total = conc + disc + tied
    return 0.5 if total == 0 else (conc + 0.5 * tied) / total


def concordance(model: CoxModel, X, times, events) -> float:
    return concordance_index(model.risk(X), times, events)
