"""Approximation-isochrone benchmarking.

For every penalty on a grid ``lam_i = lam_max * 2**-e_i`` a certified
reference minimizer is computed; each solver is then run under increasing
matvec (or wall-clock) budgets and the relative error to the reference is
recorded at each budget level.
"""

from __future__ import annotations

import csv
import io
import json
import logging
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from .operator import GeneratedProblem, LinearOperator
from .prox import lambda_from_rho, lambda_max, rho_from_lambda, soft_threshold
from .solvers import SOLVERS, GPConfig, Objective, StopRule, fista_solve

log = logging.getLogger(__name__)

NNZ_CUTOFF = 1e-10

TABLE_FIELDS = ("solver", "exponent", "lambda", "rho", "nnz", "budget_matvecs",
                "budget_seconds", "rel_error", "matvecs", "seconds")


class ReferenceError(RuntimeError):
    """The reference oracle could not certify a minimizer."""


@dataclass(frozen=True)
class LambdaGrid:
    lambda_max: float
    exponents: tuple

    def __post_init__(self):
        e = np.asarray(self.exponents, dtype=float)
        if e.size and np.any(np.diff(e) <= 0):
            raise ValueError("grid exponents must be strictly increasing")

    @property
    def lambdas(self) -> np.ndarray:
        return self.lambda_max * 2.0 ** (-np.asarray(self.exponents, dtype=float))

    def __len__(self):
        return len(self.exponents)


def build_grid(K: LinearOperator, y, count: int = 50, min_exp: float = 0.5,
               max_exp: float = 16.0) -> LambdaGrid:
    """Grid of `count` penalties with equally spaced ``log2(lam_max / lam)``."""
    if count < 2:
        raise ValueError("count must be >= 2")
    if not min_exp < max_exp:
        raise ValueError("need min_exp < max_exp")
    lmax = lambda_max(K, y)
    if lmax == 0.0:
        raise ValueError("lambda_max is zero (K^T y = 0); every minimizer is zero")
    exps = np.linspace(min_exp, max_exp, count)
    return LambdaGrid(lmax, tuple(float(e) for e in exps))


@dataclass
class ReferenceSolution:
    lam: float
    rho: float
    x_ref: np.ndarray = field(repr=False)
    nnz: int
    oracle_tol: float
    residual: float
    polished: bool = False


def prox_residual(K: LinearOperator, y, x, lam) -> float:
    """``||x - S_lam[x + K^T (y - K x)]||_inf``."""
    r = K.adjoint(np.asarray(y) - K.apply(x))
    return float(np.max(np.abs(x - soft_threshold(x + r, lam))))


def _columns(K: LinearOperator, idx):
    if hasattr(K, "matrix"):
        return K.matrix[:, idx]
    eye = np.zeros(K.p)
    cols = []
    for j in idx:
        eye[j] = 1.0
        cols.append(K.apply(eye))
        eye[j] = 0.0
    return np.column_stack(cols) if cols else np.zeros((K.n, 0))


def _polish(K, y, x, lam):
    """Solve the optimality system on the support and signs of `x`."""
    S = np.nonzero(x)[0]
    if S.size == 0 or S.size > K.n:
        return None
    A = _columns(K, S)
    sgn = np.sign(x[S])
    xs, *_ = np.linalg.lstsq(A.T @ A, A.T @ y - lam * sgn, rcond=None)
    if np.any(np.sign(xs) != sgn):
        return None
    out = np.zeros(K.p)
    out[S] = xs
    return out


def reference_minimizer(K: LinearOperator, y, lam: float, oracle_tol: float = 1e-12,
                        max_matvecs: int = 2_000_000) -> ReferenceSolution:
    """Certified minimizer of ``||K x - y||^2 + 2 lam ||x||_1``.

    Runs FISTA with adaptive restart and then re-solves the optimality
    equations on the detected support and signs. Whichever candidate has
    the smaller fixed-point residual is kept; if that residual exceeds
    `oracle_tol` a :class:`ReferenceError` is raised.
    """
    y = np.asarray(y, dtype=np.float64)
    if lam >= lambda_max(K, y):
        return ReferenceSolution(lam, 0.0, np.zeros(K.p), 0, oracle_tol, 0.0)
    if lam <= 0:
        raise ValueError("reference_minimizer needs lam > 0")
    prob = Objective(K, y)
    stop = StopRule(max_iters=None, max_matvecs=max_matvecs, stationarity_tol=oracle_tol * 1e-2)
    x = fista_solve(prob, lam, stop, restart=True).x
    best, best_res, polished = x, prox_residual(K, y, x, lam), False
    if best_res > oracle_tol * 1e-2:
        xp = _polish(K, y, x, lam)
        if xp is not None:
            res = prox_residual(K, y, xp, lam)
            if res < best_res:
                best, best_res, polished = xp, res, True
    if best_res > oracle_tol:
        raise ReferenceError(
            f"reference at lambda={lam:.6g} reached residual {best_res:.3e} > {oracle_tol:.1e}")
    return ReferenceSolution(lam, rho_from_lambda(best), best,
                             int(np.count_nonzero(np.abs(best) > NNZ_CUTOFF)),
                             oracle_tol, best_res, polished)


def compute_references(K, y, grid: LambdaGrid, oracle_tol=1e-12, jobs=1, cache_dir=None,
                       problem_id=None):
    """References for every grid point, optionally cached on disk.

    Each cache file records `problem_id`; a cache written for a different
    problem is refused rather than silently reused.
    """
    refs = [None] * len(grid)
    todo = []
    for i, lam in enumerate(grid.lambdas):
        cached = _load_cached(cache_dir, i, lam, problem_id) if cache_dir else None
        if cached is not None:
            refs[i] = cached
        else:
            todo.append(i)
    lams = grid.lambdas
    for i, ref in zip(todo, _map(jobs, _reference_task,
                                 [(K, y, float(lams[i]), oracle_tol) for i in todo])):
        refs[i] = ref
        if cache_dir:
            _store_cached(cache_dir, i, ref, problem_id)
    return refs


def _reference_task(args):
    K, y, lam, tol = args
    return reference_minimizer(K, y, lam, tol)


def _cache_path(cache_dir, i):
    return Path(cache_dir) / f"ref_{i:04d}.npz"


def _load_cached(cache_dir, i, lam, problem_id):
    path = _cache_path(cache_dir, i)
    if not path.exists():
        return None
    with np.load(path) as z:
        meta = json.loads(str(z["meta"]))
        x = z["x"].copy()
    if meta["problem_id"] != problem_id:
        raise ReferenceError(
            f"reference cache {path} belongs to problem {meta['problem_id']!r}, "
            f"not {problem_id!r}; remove the cache directory or choose another")
    if meta["lam"] != float(lam):
        raise ReferenceError(f"reference cache {path} holds lambda={meta['lam']!r}, "
                             f"grid expects {float(lam)!r}; the grid changed")
    return ReferenceSolution(meta["lam"], meta["rho"], x, meta["nnz"], meta["oracle_tol"],
                             meta["residual"], meta["polished"])


def _store_cached(cache_dir, i, ref, problem_id):
    Path(cache_dir).mkdir(parents=True, exist_ok=True)
    meta = dict(problem_id=problem_id, lam=ref.lam, rho=ref.rho, nnz=ref.nnz,
                oracle_tol=ref.oracle_tol, residual=ref.residual, polished=ref.polished)
    tmp = _cache_path(cache_dir, i).with_suffix(".tmp.npz")
    np.savez(tmp, x=ref.x_ref, meta=np.array(json.dumps(meta)))
    os.replace(tmp, _cache_path(cache_dir, i))


def _map(jobs, fn, items):
    if jobs is None or jobs <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(fn, items))


@dataclass
class IsochroneRecord:
    solver: str
    lambda_index: int
    exponent: float
    lam: float
    rho: float
    nnz: int
    budget_matvecs: Optional[int]
    budget_seconds: Optional[float]
    rel_error: float
    matvecs: int
    seconds: float

    def sort_key(self):
        return (self.solver, self.exponent,
                -1 if self.budget_matvecs is None else self.budget_matvecs,
                -1.0 if self.budget_seconds is None else self.budget_seconds)


def _relerr(x, ref):
    return float(np.linalg.norm(x - ref.x_ref) / np.linalg.norm(ref.x_ref))


def _race(args):
    """Run one solver at one grid point and read off every budget level."""
    (name, K, y, i, exponent, ref, budgets, seconds_budgets, cfg) = args
    prob = Objective(K, y)
    max_mv = max(budgets) if budgets else None
    max_s = max(seconds_budgets) if seconds_budgets else None
    stop = StopRule(max_iters=None, max_matvecs=max_mv, max_seconds=max_s, stationarity_tol=0.0)
    # snapshots: (matvecs, seconds, rel_error); x0 = 0 is free
    snaps = [(0, 0.0, _relerr(np.zeros(K.p), ref))]

    def cb(rec, x):
        snaps.append((rec.matvecs, rec.elapsed, _relerr(x, ref)))

    SOLVERS[name](prob, lam=ref.lam, rho=ref.rho, cfg=cfg, stop=stop, callback=cb)
    out = []
    for b in budgets:
        mv, sec, err = max((s for s in snaps if s[0] <= b), key=lambda s: s[0])
        out.append(IsochroneRecord(name, i, exponent, ref.lam, ref.rho, ref.nnz, int(b), None,
                                   err, mv, sec))
    for b in seconds_budgets:
        within = [s for s in snaps if s[1] <= b]
        mv, sec, err = within[-1]
        out.append(IsochroneRecord(name, i, exponent, ref.lam, ref.rho, ref.nnz, None, float(b),
                                   err, mv, sec))
    return out


def run_isochrones(problem: GeneratedProblem, grid: LambdaGrid, references, solvers: Sequence[str],
                   budgets: Sequence[int] = (), seconds_budgets: Sequence[float] = (),
                   cfg: GPConfig = None, jobs: int = 1) -> list:
    """Relative error of each solver at each grid point and budget.

    Constrained solvers get ``rho = ||x_ref||_1``, penalized ones get the
    grid penalty. Grid points whose reference is zero (``lam >= lam_max``)
    have no defined relative error and are skipped. Output is sorted by
    ``(solver, exponent, budget)`` regardless of `jobs`.
    """
    if len(references) != len(grid):
        raise ValueError("need exactly one reference per grid point")
    for s in solvers:
        if s not in SOLVERS:
            raise ValueError(f"unknown solver {s!r}; choose from {sorted(SOLVERS)}")
    if not budgets and not seconds_budgets:
        raise ValueError("no budgets given")
    tasks = []
    for i, (e, ref) in enumerate(zip(grid.exponents, references)):
        if ref is None:
            raise ValueError(f"missing reference for grid point {i}")
        if not np.any(ref.x_ref):
            log.warning("skipping grid point %d: reference minimizer is zero", i)
            continue
        for name in solvers:
            tasks.append((name, problem.K, problem.y, i, float(e), ref, sorted(budgets),
                          sorted(seconds_budgets), cfg))
    records = [r for chunk in _map(jobs, _race, tasks) for r in chunk]
    records.sort(key=IsochroneRecord.sort_key)
    return records


def matvecs_to_tolerance(name: str, K, y, ref: ReferenceSolution, tol: float,
                         max_matvecs: int, cfg: GPConfig = None) -> Optional[int]:
    """Products needed by solver `name` to reach relative error <= `tol`,
    or ``None`` if the budget runs out first."""
    prob = Objective(K, y)
    hit = []

    def cb(rec, x):
        if _relerr(x, ref) <= tol:
            hit.append(rec.matvecs)
            return True
        return False

    stop = StopRule(max_iters=None, max_matvecs=max_matvecs, stationarity_tol=0.0)
    SOLVERS[name](prob, lam=ref.lam, rho=ref.rho, cfg=cfg, stop=stop, callback=cb)
    return hit[0] if hit else None


def _fmt(v):
    if v is None:
        return ""
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    return "%.17g" % v


def _row(rec: IsochroneRecord, timing: bool):
    return {
        "solver": rec.solver,
        "exponent": rec.exponent,
        "lambda": rec.lam,
        "rho": rec.rho,
        "nnz": rec.nnz,
        "budget_matvecs": rec.budget_matvecs,
        "budget_seconds": rec.budget_seconds,
        "rel_error": rec.rel_error,
        "matvecs": rec.matvecs,
        "seconds": rec.seconds if timing else None,
    }


def isochrone_table(records, format: str = "csv", timing: bool = False) -> str:
    """Serialize records as CSV (or JSON with the same field names).

    Floats carry 17 significant digits. Wall-clock seconds are left empty
    unless `timing` is set, so that repeated runs produce identical bytes.
    """
    if not records:
        raise ValueError("no records to write")
    records = sorted(records, key=IsochroneRecord.sort_key)
    rows = [_row(r, timing) for r in records]
    if format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(TABLE_FIELDS)
        for row in rows:
            w.writerow([row[k] if isinstance(row[k], str) else _fmt(row[k]) for k in TABLE_FIELDS])
        return buf.getvalue()
    if format == "json":
        # floats as 17-digit strings parsed back to numbers keep full precision
        items = []
        for row in rows:
            items.append("{" + ", ".join(
                f"{json.dumps(k)}: " + (json.dumps(v) if isinstance(v, str)
                                        else ("null" if v is None else _fmt(v)))
                for k, v in row.items()) + "}")
        return "[\n" + ",\n".join(items) + "\n]\n"
    raise ValueError(f"unknown format {format!r}; use 'csv' or 'json'")


def emit_isochrone_table(records, path, format: Optional[str] = None, timing: bool = False) -> Path:
    path = Path(path)
    if format is None:
        format = "json" if path.suffix.lower() == ".json" else "csv"
    text = isochrone_table(records, format, timing)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(text)
    except OSError as exc:
        raise OSError(f"cannot write isochrone table to {path}: {exc}") from exc
    return path


def lambda_roundtrip_error(K, y, ref: ReferenceSolution) -> float:
    """Relative mismatch of ``lambda_from_rho(x_ref)`` against the grid penalty."""
    if not np.any(ref.x_ref):
        return 0.0
    return abs(lambda_from_rho(K, y, ref.x_ref) - ref.lam) / ref.lam
