"""Generalized linear models fit by damped Newton iterations."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..errors import LengthMismatchError, ParameterError, SingularError

DEFAULT_L2 = 1e-3
MAX_ITER = 200
GRAD_TOL = 1e-8


@dataclass(frozen=True)
class GlmModel:
    family: str
    coef: np.ndarray
    intercept: float
    l2: float
    n_iter: int = 0
    converged: bool = True
    loss_path: tuple = field(default=(), repr=False, compare=False)

    def decision(self, X) -> np.ndarray:
        X = np.asarray(X, dtype=np.float64).reshape(-1, self.coef.size)
        return X @ self.coef + self.intercept

    def predict(self, X) -> np.ndarray:
        z = self.decision(X)
        if self.family == "logistic":
            return _sigmoid(z)
        return z

    def to_dict(self) -> dict:
        return {"family": self.family, "coef": self.coef.tolist(), "intercept": self.intercept, "l2": self.l2}

    @classmethod
    def from_dict(cls, d: dict) -> GlmModel:
        return cls(d["family"], np.asarray(d["coef"], dtype=np.float64), float(d["intercept"]), float(d["l2"]))


def _sigmoid(z):
    return np.exp(-np.logaddexp(0.0, -z))


def _design(X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim == 1:
        X = X.reshape(-1, 1)
    return np.hstack([np.ones((X.shape[0], 1)), X])


def glm_objective(theta, X, y, family: str, l2: float, hessian: bool = True):
    """(Negative log-likelihood + l2/2 * |coef|^2) / n with gradient (and Hessian).

    The penalty acts on the summed likelihood, so its pull fades as n grows.
    ``theta`` is ``[intercept, coef...]``; the intercept is not penalized.
    """
    Z = _design(X)
    theta = np.asarray(theta, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    n = Z.shape[0]
    eta = Z @ theta
    pen = np.ones_like(theta)
    pen[0] = 0.0
    if family == "linear":
        r = eta - y
        loss = 0.5 * np.mean(r * r)
        grad = Z.T @ r / n
        weights = np.ones(n)
    elif family == "logistic":
        loss = np.mean(np.logaddexp(0.0, eta) - y * eta)
        mu = _sigmoid(eta)
        grad = Z.T @ (mu - y) / n
        weights = mu * (1.0 - mu)
    else:
        raise ParameterError(f"unknown family {family!r}")
    lam = l2 / n
    loss += 0.5 * lam * np.sum(pen * theta * theta)
    grad = grad + lam * pen * theta
    if not hessian:
        return float(loss), grad
    H = (Z * weights[:, None]).T @ Z / n + np.diag(lam * pen)
    return float(loss), grad, H


def fit_glm(X, y, family: str = "linear", l2: float = DEFAULT_L2, seed=None,
            max_iter: int = MAX_ITER, tol: float = GRAD_TOL) -> GlmModel:
    """Damped Newton with step halving. ``seed`` is accepted for API symmetry; the fit is deterministic."""
    Z = _design(X)
    y = np.asarray(y, dtype=np.float64).reshape(-1)
    if Z.shape[0] != y.size:
        raise LengthMismatchError(f"X has {Z.shape[0]} rows but y has {y.size}")
    if y.size < 2:
        raise LengthMismatchError("need at least 2 observations")
    if l2 < 0:
        raise ParameterError("l2 must be non-negative")
    if family == "logistic" and not np.all((y == 0) | (y == 1)):
        raise ParameterError("logistic targets must be 0/1")
    X = Z[:, 1:]
    if l2 == 0 and np.linalg.matrix_rank(Z) < Z.shape[1]:
        raise SingularError("design matrix is rank deficient and l2 = 0")

    theta = np.zeros(Z.shape[1])
    if family == "linear":
        theta[0] = y.mean()
    else:
        p = np.clip(y.mean(), 1e-6, 1 - 1e-6)
        theta[0] = np.log(p / (1 - p))
    loss, grad, H = glm_objective(theta, X, y, family, l2)
    path = [loss]
    it = 0
    converged = np.linalg.norm(grad) <= tol
    while not converged and it < max_iter:
        it += 1
        try:
            step = np.linalg.solve(H, grad)
        except np.linalg.LinAlgError:
            if l2 == 0:
                raise SingularError("Hessian is singular") from None
            step = np.linalg.lstsq(H, grad, rcond=None)[0]
        t = 1.0
        for _ in range(40):
            cand = theta - t * step
            cand_loss, _ = glm_objective(cand, X, y, family, l2, hessian=False)
            if cand_loss <= loss:
                break
            t *= 0.5
        else:
            break  # no descent possible at machine precision
        theta = cand
        loss, grad, H = glm_objective(theta, X, y, family, l2)
        path.append(loss)
        converged = np.linalg.norm(grad) <= tol
    return GlmModel(family, theta[1:].copy(), float(theta[0]), float(l2), it, bool(converged), tuple(path))
