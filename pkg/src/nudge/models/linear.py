"""Linear lifetime regressors: ordinary least squares and Bayesian ridge."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Standardizer:
    mean: np.ndarray
    scale: np.ndarray

    @classmethod
    def fit(cls, X: np.ndarray) -> "Standardizer":
        mean = X.mean(axis=0)
        scale = X.std(axis=0)
        scale = np.where(scale > 0, scale, 1.0)
        return cls(mean, scale)

    def transform(self, X: np.ndarray) -> np.ndarray:
        return (X - self.mean) / self.scale

    def unscale(self, coef: np.ndarray, y_mean: float) -> tuple[np.ndarray, float]:
        """Map standardized-space weights back to raw-feature weights and intercept."""
        w = coef / self.scale
        return w, float(y_mean - self.mean @ w)


def least_squares(X: np.ndarray, y: np.ndarray, jitter: float = 1e-8) -> tuple[np.ndarray, float]:
    """Solve the normal equations on standardized features.

    A singular Gram matrix (constant or collinear columns) gets ``jitter``
    added to its diagonal, which zeroes the weight of any constant column.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    std = Standardizer.fit(X)
    Z = std.transform(X)
    y_mean = float(y.mean())
    gram = Z.T @ Z
    rhs = Z.T @ (y - y_mean)
    if np.linalg.matrix_rank(gram) < gram.shape[0]:
        gram = gram + jitter * np.eye(gram.shape[0])
    coef = np.linalg.solve(gram, rhs)
    return std.unscale(coef, y_mean)


@dataclass(frozen=True)
class BayesianRidgeFit:
    weights: np.ndarray
    intercept: float
    alpha: float  # noise precision
    lambda_: float  # weight precision
    n_iter: int


def bayesian_ridge(
    X: np.ndarray,
    y: np.ndarray,
    tol: float = 1e-6,
    max_iter: int = 300,
    alpha_1: float = 1e-6,
    alpha_2: float = 1e-6,
    lambda_1: float = 1e-6,
    lambda_2: float = 1e-6,
) -> BayesianRidgeFit:
    """Evidence-maximisation (MacKay) updates of the noise and weight precisions.

    Gamma hyperpriors ``(alpha_1, alpha_2)`` on the noise precision and
    ``(lambda_1, lambda_2)`` on the weight precision.  Iterates until the L1
    change in weights drops below ``tol`` or ``max_iter`` is reached.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n, p = X.shape
    std = Standardizer.fit(X)
    Z = std.transform(X)
    y_mean = float(y.mean())
    yc = y - y_mean

    U, S, Vt = np.linalg.svd(Z, full_matrices=False)
    eig = S**2
    Uty = U.T @ yc

    alpha = 1.0 / (float(np.var(yc)) + np.finfo(float).eps)
    lam = 1.0
    coef = np.zeros(p)

    def posterior_mean(alpha, lam):
        return Vt.T @ (S / (eig + lam / alpha) * Uty)

    n_iter = 0
    for n_iter in range(1, max_iter + 1):
        new = posterior_mean(alpha, lam)
        sse = float(np.sum((yc - Z @ new) ** 2))
        gamma = float(np.sum(alpha * eig / (lam + alpha * eig)))
        lam = (gamma + 2 * lambda_1) / (float(new @ new) + 2 * lambda_2)
        alpha = (n - gamma + 2 * alpha_1) / (sse + 2 * alpha_2)
        converged = n_iter > 1 and float(np.sum(np.abs(coef - new))) < tol
        coef = new
        if converged:
            break
    coef = posterior_mean(alpha, lam)
    w, b = std.unscale(coef, y_mean)
    return BayesianRidgeFit(w, b, float(alpha), float(lam), n_iter)
