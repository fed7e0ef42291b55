"""Soft-thresholding, projection onto the l1-ball and lambda/rho conversions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .operator import LinearOperator

__all__ = [
    "L1Ball",
    "soft_threshold",
    "l1_ball_threshold",
    "project_l1_ball",
    "lambda_max",
    "lambda_from_rho",
    "rho_from_lambda",
]


def soft_threshold(x, lam: float) -> np.ndarray:
    r"""Componentwise soft-thresholding.

    Returns :math:`x_i - \lambda\,\mathrm{sgn}(x_i)` where
    :math:`|x_i| > \lambda` and zero elsewhere, i.e. the minimizer of
    :math:`(t - x_i)^2 + 2\lambda |t|` for each component.

    Parameters
    ----------
    x : array_like
        Input vector.
    lam : float
        Threshold, must be nonnegative.
    """
    if lam < 0:
        raise ValueError(f"threshold must be nonnegative, got {lam}")
    x = np.asarray(x, dtype=np.float64)
    return np.sign(x) * np.maximum(np.abs(x) - lam, 0.0)


def l1_ball_threshold(x, rho: float) -> float:
    """Threshold ``theta`` such that ``soft_threshold(x, theta)`` is the
    projection of `x` onto ``{u : ||u||_1 <= rho}``.

    Zero when `x` is already feasible. Uses the sort-based exact rule:
    with ``a`` the magnitudes sorted in decreasing order, take the largest
    ``k`` such that ``a[k] > (sum(a[:k]) - rho) / k``. The result is then
    nudged up, if needed, so that the thresholded vector's computed l1-norm
    does not exceed `rho`; this makes projection exactly idempotent.
    """
    if rho < 0:
        raise ValueError(f"radius must be nonnegative, got {rho}")
    a = np.abs(np.asarray(x, dtype=np.float64))
    if a.sum() <= rho:
        return 0.0
    if rho == 0:
        return float(a.max())
    srt = np.sort(a)[::-1]
    cs = np.cumsum(srt)
    ks = np.arange(1, a.size + 1)
    cand = (cs - rho) / ks
    hits = np.nonzero(srt > cand)[0]
    k = hits[-1] if hits.size else 0
    theta = float(max(cand[k], 0.0))
    for _ in range(64):
        shrunk = np.maximum(a - theta, 0.0)
        excess = shrunk.sum() - rho
        if excess <= 0:
            break
        active = np.count_nonzero(shrunk)
        theta = max(theta + excess / active, np.nextafter(theta, np.inf))
    return theta


def project_l1_ball(x, rho: float) -> np.ndarray:
    """Euclidean projection of `x` onto the l1-ball of radius `rho`.

    Feasible inputs (including the boundary) are returned unchanged and
    ``rho == 0`` yields the zero vector.
    """
    x = np.asarray(x, dtype=np.float64)
    theta = l1_ball_threshold(x, rho)
    if theta == 0.0:
        return x.copy()
    if rho == 0:
        return np.zeros_like(x)
    return soft_threshold(x, theta)


@dataclass(frozen=True)
class L1Ball:
    """The feasible set ``{x : ||x||_1 <= rho}``."""

    rho: float

    def __post_init__(self):
        if self.rho < 0:
            raise ValueError(f"radius must be nonnegative, got {self.rho}")

    def project(self, x) -> np.ndarray:
        return project_l1_ball(x, self.rho)

    def contains(self, x, tol: float = 1e-12) -> bool:
        return float(np.abs(x).sum()) <= self.rho + tol


def lambda_max(K: LinearOperator, y) -> float:
    """Smallest penalty for which the lasso minimizer is zero: ``max |K^T y|``."""
    return float(np.max(np.abs(K.adjoint(y))))


def lambda_from_rho(K: LinearOperator, y, x_rho) -> float:
    """Penalty matching a constrained minimizer: ``max |K^T (y - K x_rho)|``."""
    y = np.asarray(y, dtype=np.float64)
    return float(np.max(np.abs(K.adjoint(y - K.apply(x_rho)))))


def rho_from_lambda(x_lambda) -> float:
    """Radius matching a penalized minimizer: ``||x_lambda||_1``."""
    return float(np.abs(np.asarray(x_lambda, dtype=np.float64)).sum())
