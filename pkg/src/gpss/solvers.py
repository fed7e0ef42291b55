"""Iterative solvers for the lasso and its l1-constrained form.

Penalized problem (ISTA, FISTA)::

    min_x ||K x - y||^2 + 2 lam ||x||_1

Constrained problem (PSD, GPSS)::

    min_x ||K x - y||^2   subject to   ||x||_1 <= rho

Every solver keeps ``K x`` for the current iterate in its state so that
objective values never cost an extra product. Products with ``K`` or
``K^T`` are counted on the :class:`SolverState`; per-iteration costs are

======  ======================================================
ISTA    2  (``K^T`` residual, ``K`` at the new iterate)
FISTA   2  (``K x`` at the extrapolated point is a linear combination)
PSD     3  (``K^T`` residual, ``K r`` for the step, ``K`` at new iterate)
GPSS    2  (``K^T`` gradient, ``K d``; the line search is free)
======  ======================================================

plus one product for ``K x0`` when ``x0`` is nonzero. A GPSS run that ends
on stationarity also pays for the gradient that detected it. A run never
starts an iteration that would exceed ``StopRule.max_matvecs``.
"""

from __future__ import annotations

import math
import time
from collections import deque
from dataclasses import asdict, dataclass, field
from typing import Callable, Optional

import numpy as np

from .operator import LinearOperator
from .prox import project_l1_ball, soft_threshold

__all__ = [
    "Objective",
    "GPConfig",
    "StopRule",
    "SolverState",
    "SteplengthState",
    "IterationRecord",
    "LineSearchError",
    "ista_solve",
    "fista_solve",
    "psd_solve",
    "gpss_solve",
    "gp_iterate",
    "gp_init",
    "backtracking_search",
    "steplength_select",
    "alpha0_init",
    "SOLVERS",
    "PENALIZED",
    "CONSTRAINED",
]

PENALIZED = ("ista", "fista")
CONSTRAINED = ("psd", "gpss")

_EPS = np.finfo(float).eps

_COST = {"ista": 2, "fista": 2, "psd": 3, "gpss": 2}


class LineSearchError(RuntimeError):
    """Backtracking did not terminate; the direction is not a descent direction."""


@dataclass
class Objective:
    """Least-squares misfit ``f(x) = ||K x - y||^2``.

    These helpers are for callers and tests; solvers do their own (counted)
    products.
    """

    K: LinearOperator
    y: np.ndarray

    def __post_init__(self):
        self.y = np.asarray(self.y, dtype=np.float64)
        if self.y.shape != (self.K.n,):
            raise ValueError(f"data vector must have length {self.K.n}, got {self.y.shape}")

    @property
    def p(self):
        return self.K.p

    def value(self, x) -> float:
        u = self.K.apply(x) - self.y
        return float(u @ u)

    def gradient(self, x) -> np.ndarray:
        """``2 K^T (K x - y)``."""
        return 2.0 * self.K.adjoint(self.K.apply(x) - self.y)

    def residual(self, x) -> np.ndarray:
        """``K^T (y - K x)``, equal to minus half the gradient."""
        return self.K.adjoint(self.y - self.K.apply(x))

    def penalized_value(self, x, lam: float) -> float:
        return self.value(x) + 2.0 * lam * float(np.abs(x).sum())

    def projected_stationarity(self, x, rho: float) -> float:
        """``||P(x - grad f(x)) - x||_inf``; zero exactly at constrained minimizers."""
        return float(np.max(np.abs(project_l1_ball(x - self.gradient(x), rho) - x)))

    def prox_stationarity(self, x, lam: float) -> float:
        """``||S_lam[x + K^T(y - K x)] - x||_inf``; zero exactly at lasso minimizers."""
        return float(np.max(np.abs(soft_threshold(x + self.residual(x), lam) - x)))


@dataclass(frozen=True)
class GPConfig:
    """Parameters of the gradient projection method and its steplength rule.

    Defaults are the monotone setting: ``M = 1``, ``theta = 0.5``,
    ``beta = 1e-4``, ``alpha`` clamped to ``[1e-10, 1e10]``, initial
    threshold ``tau_1 = 0.5`` and ``M_alpha = 2``.
    """

    beta: float = 1e-4
    theta: float = 0.5
    M: int = 1
    alpha_min: float = 1e-10
    alpha_max: float = 1e10
    tau_1: float = 0.5
    M_alpha: int = 2
    max_backtracks: int = 60

    def __post_init__(self):
        if not 0 < self.beta < 1:
            raise ValueError(f"beta must lie in (0, 1), got {self.beta}")
        if not 0 < self.theta < 1:
            raise ValueError(f"theta must lie in (0, 1), got {self.theta}")
        if not 0 < self.alpha_min < self.alpha_max:
            raise ValueError("need 0 < alpha_min < alpha_max")
        if not 0 < self.tau_1 < 1:
            raise ValueError(f"tau_1 must lie in (0, 1), got {self.tau_1}")
        if int(self.M) != self.M or self.M < 1:
            raise ValueError(f"M must be a positive integer, got {self.M}")
        if int(self.M_alpha) != self.M_alpha or self.M_alpha < 0:
            raise ValueError(f"M_alpha must be a nonnegative integer, got {self.M_alpha}")
        if self.max_backtracks < 1:
            raise ValueError("max_backtracks must be >= 1")

    def clamp(self, alpha: float) -> float:
        return max(self.alpha_min, min(alpha, self.alpha_max))


@dataclass(frozen=True)
class StopRule:
    """Budgets and tolerances shared by all solvers.

    `stationarity_tol` applies to the infinity norm of the change produced
    by one iteration (``h - x`` for GPSS). `objective_tol`, when set, stops
    on a relative objective change below it.
    """

    max_iters: Optional[int] = 10_000
    max_matvecs: Optional[int] = None
    max_seconds: Optional[float] = None
    stationarity_tol: float = 1e-9
    objective_tol: Optional[float] = None

    def __post_init__(self):
        if self.max_iters is None and self.max_matvecs is None and self.max_seconds is None:
            raise ValueError("at least one of max_iters, max_matvecs, max_seconds must be set")
        for name in ("max_iters", "max_matvecs", "max_seconds"):
            v = getattr(self, name)
            if v is not None and v < 0:
                raise ValueError(f"{name} must be nonnegative, got {v}")
        if self.stationarity_tol < 0:
            raise ValueError("stationarity_tol must be nonnegative")
        if self.objective_tol is not None and self.objective_tol < 0:
            raise ValueError("objective_tol must be nonnegative")

    def budget_reason(self, state: "SolverState", cost: int) -> Optional[str]:
        """Name of the budget that forbids one more iteration of `cost` products."""
        if self.max_iters is not None and state.k >= self.max_iters:
            return "max_iters"
        if self.max_matvecs is not None and state.matvecs + cost > self.max_matvecs:
            return "max_matvecs"
        if self.max_seconds is not None and state.elapsed >= self.max_seconds:
            return "max_seconds"
        return None


@dataclass
class IterationRecord:
    """Telemetry for one completed iteration.

    The GP-specific fields are ``None`` for the other solvers. `bb1`/`bb2`
    are the raw Barzilai-Borwein quotients, `alpha1`/`alpha2` their clamped
    values, `tau`/`tau_next` the alternation threshold before and after.
    """

    solver: str
    k: int
    f: float
    stationarity: float
    alpha: Optional[float]
    step: Optional[float]
    matvecs: int
    elapsed: float
    f_prev: Optional[float] = None
    f_max: Optional[float] = None
    gtd: Optional[float] = None
    sTz: Optional[float] = None
    bb1: Optional[float] = None
    bb2: Optional[float] = None
    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    tau: Optional[float] = None
    tau_next: Optional[float] = None
    branch: Optional[str] = None
    backtracks: Optional[int] = None
    t: Optional[float] = None

    def to_dict(self, timing: bool = True) -> dict:
        d = asdict(self)
        if not timing:
            d.pop("elapsed")
        return d


@dataclass
class SolverState:
    """Mutable state of one solver run.

    `f` is the objective of the problem being solved (penalized for
    ISTA/FISTA). `Kx` caches ``K @ x``; `grad` is only kept by GPSS.
    """

    x: np.ndarray
    k: int = 0
    f: float = math.nan
    f_history: deque = field(default_factory=lambda: deque(maxlen=1))
    matvecs: int = 0
    elapsed: float = 0.0
    stationarity: float = math.inf
    reason: Optional[str] = None
    last: Optional[IterationRecord] = None
    Kx: Optional[np.ndarray] = field(default=None, repr=False)
    grad: Optional[np.ndarray] = field(default=None, repr=False)

    @property
    def stationary(self) -> bool:
        return self.reason == "stationary"


@dataclass
class SteplengthState:
    """State of the adaptive Barzilai-Borwein alternation.

    `alpha2_history` holds the last ``M_alpha + 1`` clamped BB2 values; only
    iterations with ``s^T z > 0`` contribute to it.
    """

    tau: float
    alpha2_history: deque
    prev_x: Optional[np.ndarray] = field(default=None, repr=False)
    prev_grad: Optional[np.ndarray] = field(default=None, repr=False)
    sTz: Optional[float] = None
    bb1: Optional[float] = None
    bb2: Optional[float] = None
    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    tau_prev: Optional[float] = None
    branch: Optional[str] = None

    @classmethod
    def initial(cls, cfg: GPConfig) -> "SteplengthState":
        return cls(tau=cfg.tau_1, alpha2_history=deque(maxlen=cfg.M_alpha + 1))


Callback = Callable[[IterationRecord, np.ndarray], Optional[bool]]


def _fwd(K, state, x):
    state.matvecs += 1
    return K.apply(x)


def _adj(K, state, r):
    state.matvecs += 1
    return K.adjoint(r)


def _start(prob: Objective, x0, penalty=None) -> SolverState:
    p = prob.K.p
    x = np.zeros(p) if x0 is None else np.array(x0, dtype=np.float64)
    if x.shape != (p,):
        raise ValueError(f"x0 must have length {p}, got shape {x.shape}")
    state = SolverState(x=x)
    if np.any(x):
        state.Kx = _fwd(prob.K, state, x)
    else:
        state.Kx = np.zeros(prob.K.n)
    u = state.Kx - prob.y
    state.f = float(u @ u)
    if penalty is not None:
        state.f += 2.0 * penalty * float(np.abs(x).sum())
    return state


def _finish_iteration(state, stop, callback, rec, f_old, t0):
    """Common bookkeeping; returns True when the run must stop."""
    state.k += 1
    state.elapsed = time.perf_counter() - t0
    rec.k = state.k
    rec.matvecs = state.matvecs
    rec.elapsed = state.elapsed
    state.last = rec
    if callback is not None and callback(rec, state.x):
        state.reason = "callback"
        return True
    if state.reason == "stationary":
        return True
    if stop.objective_tol is not None:
        if abs(f_old - state.f) <= stop.objective_tol * max(abs(f_old), np.finfo(float).tiny):
            state.reason = "objective_tol"
            return True
    return False


# --------------------------------------------------------------------------
# ISTA / FISTA


def ista_solve(prob: Objective, lam: float, stop: StopRule = None, callback: Callback = None,
               x0=None, scale: float = 0.999) -> SolverState:
    """Iterative soft-thresholding, ``x <- S_lam[x + K^T (y - K x)]``.

    The iteration is run on ``(scale*K, scale*y)`` with threshold
    ``scale**2 * lam``, which has exactly the same minimizer and keeps the
    scaled operator norm strictly below one when ``||K|| <= 1``.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    stop = StopRule() if stop is None else stop
    t0 = time.perf_counter()
    state = _start(prob, x0, penalty=lam)
    c2 = scale * scale
    while True:
        reason = stop.budget_reason(state, _COST["ista"])
        if reason:
            state.reason = reason
            break
        r = _adj(prob.K, state, prob.y - state.Kx)
        x_new = soft_threshold(state.x + c2 * r, c2 * lam)
        dx = float(np.max(np.abs(x_new - state.x))) if x_new.size else 0.0
        state.x = x_new
        state.Kx = _fwd(prob.K, state, x_new)
        u = state.Kx - prob.y
        f_old = state.f
        state.f = float(u @ u) + 2.0 * lam * float(np.abs(x_new).sum())
        state.stationarity = dx
        if dx <= stop.stationarity_tol:
            state.reason = "stationary"
        rec = IterationRecord("ista", 0, state.f, dx, c2, None, 0, 0.0, f_prev=f_old)
        if _finish_iteration(state, stop, callback, rec, f_old, t0):
            break
    state.elapsed = time.perf_counter() - t0
    return state


def fista_solve(prob: Objective, lam: float, stop: StopRule = None, callback: Callback = None,
                x0=None, scale: float = 0.999, restart: bool = False) -> SolverState:
    """FISTA: ISTA's map applied at the extrapolated point
    ``x_k + (t_k - 1)/t_{k+1} (x_k - x_{k-1})`` with
    ``t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2`` and ``t_0 = 1``.

    With ``restart=True`` the momentum is reset (``t = 1``) whenever the
    step and the last move disagree in direction, which speeds up the
    high-accuracy reference runs; the default is the plain method.
    """
    if lam < 0:
        raise ValueError(f"lam must be nonnegative, got {lam}")
    stop = StopRule() if stop is None else stop
    t0 = time.perf_counter()
    state = _start(prob, x0, penalty=lam)
    c2 = scale * scale
    x_prev, Kx_prev = state.x, state.Kx
    t = 1.0
    while True:
        reason = stop.budget_reason(state, _COST["fista"])
        if reason:
            state.reason = reason
            break
        t_next = 0.5 * (1.0 + math.sqrt(1.0 + 4.0 * t * t))
        mom = (t - 1.0) / t_next
        if mom != 0.0:
            v = state.x + mom * (state.x - x_prev)
            Kv = state.Kx + mom * (state.Kx - Kx_prev)
        else:
            v, Kv = state.x, state.Kx
        r = _adj(prob.K, state, prob.y - Kv)
        x_new = soft_threshold(v + c2 * r, c2 * lam)
        step = x_new - v
        dx = float(np.max(np.abs(step))) if step.size else 0.0
        x_prev, Kx_prev = state.x, state.Kx
        state.x = x_new
        state.Kx = _fwd(prob.K, state, x_new)
        u = state.Kx - prob.y
        f_old = state.f
        state.f = float(u @ u) + 2.0 * lam * float(np.abs(x_new).sum())
        state.stationarity = dx
        if dx <= stop.stationarity_tol:
            state.reason = "stationary"
        rec = IterationRecord("fista", 0, state.f, dx, c2, mom, 0, 0.0, f_prev=f_old, t=t_next)
        t = t_next
        if restart and float(step @ (x_new - x_prev)) < 0.0:
            # step points against the last move: momentum is overshooting
            t = 1.0
        if _finish_iteration(state, stop, callback, rec, f_old, t0):
            break
    state.elapsed = time.perf_counter() - t0
    return state


# --------------------------------------------------------------------------
# PSD


def psd_solve(prob: Objective, rho: float, stop: StopRule = None, callback: Callback = None,
              x0=None) -> SolverState:
    """Projected steepest descent ``x <- P[x + beta r]`` with
    ``r = K^T (y - K x)`` and ``beta = ||r||^2 / ||K r||^2``."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    stop = StopRule() if stop is None else stop
    t0 = time.perf_counter()
    state = _start(prob, x0)
    if np.abs(state.x).sum() > rho + 1e-12:
        raise ValueError("x0 is not in the l1-ball")
    while True:
        reason = stop.budget_reason(state, _COST["psd"])
        if reason:
            state.reason = reason
            break
        r = _adj(prob.K, state, prob.y - state.Kx)
        rr = float(r @ r)
        if rr == 0.0:
            state.stationarity = 0.0
            state.reason = "stationary"
            break
        Kr = _fwd(prob.K, state, r)
        beta = rr / float(Kr @ Kr)
        x_new = project_l1_ball(state.x + beta * r, rho)
        dx = float(np.max(np.abs(x_new - state.x)))
        state.x = x_new
        state.Kx = _fwd(prob.K, state, x_new)
        u = state.Kx - prob.y
        f_old = state.f
        state.f = float(u @ u)
        state.stationarity = dx
        if dx <= stop.stationarity_tol:
            state.reason = "stationary"
        rec = IterationRecord("psd", 0, state.f, dx, beta, 1.0, 0, 0.0, f_prev=f_old)
        if _finish_iteration(state, stop, callback, rec, f_old, t0):
            break
    state.elapsed = time.perf_counter() - t0
    return state


# --------------------------------------------------------------------------
# Gradient projection with adaptive steplength (GPSS)


def alpha0_init(prob: Objective, rho: float, x0, cfg: GPConfig, grad=None) -> float:
    """Initial steplength ``clamp(1 / ||P(x0 - grad f(x0))||_inf)``."""
    if grad is None:
        grad = prob.gradient(x0)
    nrm = float(np.max(np.abs(project_l1_ball(np.asarray(x0) - grad, rho)), initial=0.0))
    if nrm == 0.0:
        return cfg.alpha_max
    return cfg.clamp(1.0 / nrm)


def steplength_select(sls: SteplengthState, s, z, cfg: GPConfig, k: int):
    """Adaptive alternation of the two Barzilai-Borwein steplengths.

    Updates `sls` in place and returns ``(alpha, sls)``. When
    ``s^T z <= 0`` the step is ``alpha_max`` and the threshold is left
    alone. Otherwise the clamped BB2 value is pushed to the history and

    * ``alpha2 / alpha1 <= tau``: ``alpha = min(history)``, ``tau *= 0.9``
    * else: ``alpha = alpha1``, ``tau *= 1.1``.
    """
    if k < 1:
        raise ValueError("steplength_select is for k >= 1; use alpha0_init at k = 0")
    s = np.asarray(s, dtype=np.float64)
    z = np.asarray(z, dtype=np.float64)
    sTz = float(s @ z)
    sls.sTz = sTz
    sls.tau_prev = sls.tau
    if not sTz > 0.0:
        sls.bb1 = sls.bb2 = sls.alpha1 = sls.alpha2 = None
        sls.branch = "nonpositive"
        return cfg.alpha_max, sls
    bb1 = float(s @ s) / sTz
    bb2 = sTz / float(z @ z)
    a1, a2 = cfg.clamp(bb1), cfg.clamp(bb2)
    sls.bb1, sls.bb2, sls.alpha1, sls.alpha2 = bb1, bb2, a1, a2
    sls.alpha2_history.append(a2)
    if a2 / a1 <= sls.tau:
        alpha = min(sls.alpha2_history)
        sls.tau = sls.tau * 0.9
        sls.branch = "bb2"
    else:
        alpha = a1
        sls.tau = sls.tau * 1.1
        sls.branch = "bb1"
    return alpha, sls


def _backtrack(state: SolverState, y, d, Kd, gtd, cfg: GPConfig):
    """Nonmonotone Armijo backtracking. Returns ``(step, f_new, count)``.

    ``f`` is quadratic, so the change along ``d`` is exactly
    ``lam g^T d + lam^2 ||K d||^2``; testing that expression instead of a
    difference of two objective values keeps the test meaningful when the
    change is far below the rounding level of ``f``.
    """
    u = state.Kx - y
    KdKd = float(Kd @ Kd)
    slack = max(state.f_history) - state.f
    lam = 1.0
    for count in range(cfg.max_backtracks + 1):
        delta = lam * (gtd + lam * KdKd)
        if delta <= slack + cfg.beta * lam * gtd:
            w = u + lam * Kd
            return lam, float(w @ w), count
        lam *= cfg.theta
    raise LineSearchError(
        f"backtracking exceeded {cfg.max_backtracks} reductions at k={state.k}: "
        f"g^T d = {gtd:.3e}, ||d||_inf = {np.max(np.abs(d)):.3e}, f = {state.f:.17g}; "
        "d is not a descent direction (check the gradient)")


def backtracking_search(prob: Objective, state: SolverState, d, cfg: GPConfig, Kd=None) -> float:
    """First ``lam in {1, theta, theta^2, ...}`` with
    ``f(x + lam d) <= f_max + beta lam grad^T d``, where ``f_max`` is the
    largest of the last ``M`` objective values in ``state.f_history``."""
    d = np.asarray(d, dtype=np.float64)
    if Kd is None:
        Kd = _fwd(prob.K, state, d)
    grad = state.grad if state.grad is not None else 2.0 * prob.K.adjoint(state.Kx - prob.y)
    return _backtrack(state, prob.y, d, Kd, float(grad @ d), cfg)[0]


def gp_init(prob: Objective, rho: float, cfg: GPConfig, x0=None):
    """Initial ``(SolverState, SteplengthState)`` for :func:`gp_iterate`."""
    state = _start(prob, x0)
    if np.abs(state.x).sum() > rho + 1e-12:
        raise ValueError("x0 is not in the l1-ball")
    state.f_history = deque([state.f], maxlen=cfg.M)
    return state, SteplengthState.initial(cfg)


def gp_iterate(prob: Objective, rho: float, cfg: GPConfig, state: SolverState,
               sls: SteplengthState, stationarity_tol: float = 0.0):
    """One gradient projection iteration; updates both states in place.

    Computes the gradient at ``x_k``, selects ``alpha_k``, projects
    ``x_k - alpha_k grad`` to get ``h``; if ``||h - x_k||_inf`` is at most
    `stationarity_tol` the state is flagged stationary and ``x`` is left
    unchanged. Otherwise backtracks along ``d = h - x_k`` and moves.
    Returns ``(state, sls)``.
    """
    k = state.k
    grad = 2.0 * _adj(prob.K, state, state.Kx - prob.y)
    state.grad = grad
    rec = IterationRecord("gpss", k, state.f, math.nan, None, None, state.matvecs, 0.0,
                          f_prev=state.f)
    if k == 0 or sls.prev_x is None:
        alpha = alpha0_init(prob, rho, state.x, cfg, grad=grad)
        sls.sTz = sls.bb1 = sls.bb2 = sls.alpha1 = sls.alpha2 = None
        sls.tau_prev, sls.branch = sls.tau, "init"
    else:
        alpha, sls = steplength_select(sls, state.x - sls.prev_x, grad - sls.prev_grad, cfg, k)
    rec.alpha = alpha
    rec.sTz, rec.bb1, rec.bb2 = sls.sTz, sls.bb1, sls.bb2
    rec.alpha1, rec.alpha2, rec.branch = sls.alpha1, sls.alpha2, sls.branch
    rec.tau, rec.tau_next = sls.tau_prev, sls.tau

    w = state.x - alpha * grad
    h = project_l1_ball(w, rho)
    d = h - state.x
    res = float(np.max(np.abs(d))) if d.size else 0.0
    state.stationarity = res
    rec.stationarity = res
    if res <= stationarity_tol:
        state.reason = "stationary"
        state.last = rec
        return state, sls

    # g^T d = (-||d||^2 + (h - w)^T d) / alpha with (h - w)^T d <= 0 for a
    # projection; unlike the direct product this does not cancel when x and
    # h both lie on the sphere ||.||_1 = rho
    gtd = (-float(d @ d) + min(0.0, float((h - w) @ d))) / alpha
    if gtd >= 0.0:
        # rounding in h - x bounds how accurately g^T d is known
        noise = 16 * _EPS * float(np.abs(grad) @ (np.abs(state.x) + np.abs(h)))
        if gtd > noise:
            raise LineSearchError(
                f"projected direction is ascending at k={k}: g^T d = {gtd:.3e} > "
                f"rounding level {noise:.3e}; check the gradient")
        state.reason = "stalled"
        state.last = rec
        return state, sls
    Kd = _fwd(prob.K, state, d)
    f_max = max(state.f_history)
    lam, f_new, nback = _backtrack(state, prob.y, d, Kd, gtd, cfg)

    sls.prev_x, sls.prev_grad = state.x, grad
    state.x = state.x + lam * d
    state.Kx = state.Kx + lam * Kd
    state.f = f_new
    state.f_history.append(f_new)
    rec.f, rec.step, rec.f_max, rec.gtd, rec.backtracks = f_new, lam, f_max, gtd, nback
    rec.matvecs = state.matvecs
    state.last = rec
    return state, sls


def gpss_solve(prob: Objective, rho: float, cfg: GPConfig = None, stop: StopRule = None,
               callback: Callback = None, x0=None) -> SolverState:
    """Gradient projection onto the l1-ball with nonmonotone Armijo
    backtracking and adaptive Barzilai-Borwein steplengths."""
    if rho < 0:
        raise ValueError(f"rho must be nonnegative, got {rho}")
    cfg = GPConfig() if cfg is None else cfg
    stop = StopRule() if stop is None else stop
    t0 = time.perf_counter()
    state, sls = gp_init(prob, rho, cfg, x0)
    while True:
        reason = stop.budget_reason(state, _COST["gpss"])
        if reason:
            state.reason = reason
            break
        f_old = state.f
        state, sls = gp_iterate(prob, rho, cfg, state, sls, stop.stationarity_tol)
        if state.reason in ("stationary", "stalled"):
            break
        if _finish_iteration(state, stop, callback, state.last, f_old, t0):
            break
    state.elapsed = time.perf_counter() - t0
    return state


def _run_ista(prob, lam=None, rho=None, cfg=None, stop=None, callback=None, x0=None):
    return ista_solve(prob, lam, stop, callback, x0)


def _run_fista(prob, lam=None, rho=None, cfg=None, stop=None, callback=None, x0=None):
    return fista_solve(prob, lam, stop, callback, x0)


def _run_psd(prob, lam=None, rho=None, cfg=None, stop=None, callback=None, x0=None):
    return psd_solve(prob, rho, stop, callback, x0)


def _run_gpss(prob, lam=None, rho=None, cfg=None, stop=None, callback=None, x0=None):
    return gpss_solve(prob, rho, cfg, stop, callback, x0)


# Uniform entry points: penalized solvers read `lam`, constrained ones `rho`.
SOLVERS = {
    "ista": _run_ista,
    "fista": _run_fista,
    "psd": _run_psd,
    "gpss": _run_gpss,
}
