"""Built-in invariant checks, used by ``gpss verify`` and the test-suite."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import prox
from .bench import reference_minimizer
from .operator import CountingOperator, DenseOperator, gen_gaussian_problem
from .solvers import GPConfig, Objective, StopRule, gpss_solve


@dataclass
class CheckResult:
    name: str
    measured: float
    tolerance: float
    detail: str = ""

    @property
    def passed(self) -> bool:
        return bool(self.measured <= self.tolerance)

    @property
    def margin(self) -> float:
        """How far below the tolerance the measurement is (positive = pass)."""
        return self.tolerance - self.measured

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return (f"{status}  {self.name:<28s} measured={self.measured:.3e}  "
                f"tol={self.tolerance:.1e}  margin={self.margin:.3e}  {self.detail}")


def projection_kkt_violation(x, u, rho) -> float:
    """Largest violation of the optimality conditions of ``u = P(x)``.

    Nonzero components must all be shrunk by a common ``theta >= 0``
    (with unchanged sign), zeroed components must satisfy
    ``|x_i| <= theta``, and ``u`` must be feasible (on the sphere when
    ``x`` lies outside the ball).
    """
    x = np.asarray(x, dtype=float)
    u = np.asarray(u, dtype=float)
    l1x = np.abs(x).sum()
    if l1x <= rho:
        return float(np.max(np.abs(u - x), initial=0.0))
    viol = max(0.0, abs(np.abs(u).sum() - rho))
    nz = u != 0
    if not np.any(nz):
        return max(viol, float(rho)) if rho > 0 else viol
    shrink = np.abs(x[nz]) - np.abs(u[nz])
    theta = float(np.median(shrink))
    viol = max(viol, float(np.max(np.abs(shrink - theta))), max(0.0, -theta))
    viol = max(viol, float(np.max(np.abs(np.sign(u[nz]) - np.sign(x[nz])))))
    if np.any(~nz):
        viol = max(viol, float(np.max(np.abs(x[~nz]))) - theta)
    return viol


def gp_telemetry_violations(records, cfg: GPConfig, slack: float = 1e-12) -> dict:
    """Count violations of the GPSS per-iteration invariants in `records`."""
    out = {"monotone": 0, "nonmonotone_bound": 0, "alpha_range": 0, "bb_order": 0,
           "tau_ratio": 0, "descent": 0}
    for r in records:
        if cfg.M == 1 and r.f > r.f_prev + slack:
            out["monotone"] += 1
        if r.f > r.f_max + cfg.beta * r.step * r.gtd + slack:
            out["nonmonotone_bound"] += 1
        if not cfg.alpha_min <= r.alpha <= cfg.alpha_max:
            out["alpha_range"] += 1
        if not r.gtd < 0:
            out["descent"] += 1
        if r.sTz is not None and r.sTz > 0:
            if r.bb2 > r.bb1 * (1 + 1e-12):
                out["bb_order"] += 1
            ratio = r.tau_next / r.tau
            if not (abs(ratio - 0.9) < 1e-12 or abs(ratio - 1.1) < 1e-12):
                out["tau_ratio"] += 1
    return out


def run_checks(seed: int = 0, project=None) -> list:
    """Run the invariant suite; `project` replaces the l1-ball projection
    (fault injection)."""
    project = prox.project_l1_ball if project is None else project
    rng = np.random.default_rng(seed)
    results = []

    worst = 0.0
    idem = 0.0
    for _ in range(200):
        p = int(rng.integers(2, 40))
        x = rng.standard_normal(p) * rng.uniform(0.1, 10)
        rho = float(rng.uniform(0, 1.2) * np.abs(x).sum())
        u = project(x, rho)
        worst = max(worst, projection_kkt_violation(x, u, rho))
        idem = max(idem, float(np.max(np.abs(project(u, rho) - u))))
    results.append(CheckResult("projection KKT", worst, 1e-10, "200 random vectors"))
    results.append(CheckResult("projection idempotence", idem, 1e-12))

    worst = 0.0
    for _ in range(20):
        x = rng.standard_normal(30) * 3
        lam = float(rng.uniform(0, 2))
        s = prox.soft_threshold(x, lam)
        # subgradient condition of (t - x)^2 + 2 lam |t|
        nz = s != 0
        worst = max(worst, float(np.max(np.abs(s[nz] - x[nz] + lam * np.sign(s[nz])),
                                        initial=0.0)),
                    float(np.max(np.abs(x[~nz]), initial=0.0)) - lam)
    results.append(CheckResult("soft-threshold optimality", max(worst, 0.0), 1e-12))

    worst = 0.0
    for _ in range(5):
        K = DenseOperator(rng.standard_normal((10, 30)))
        obj = Objective(K, rng.standard_normal(10))
        for _ in range(4):
            x = rng.standard_normal(30)
            g = obj.gradient(x)
            h = 1e-6
            fd = np.array([(obj.value(x + h * e) - obj.value(x - h * e)) / (2 * h)
                           for e in np.eye(30)])
            worst = max(worst, float(np.linalg.norm(fd - g) / np.linalg.norm(g)))
    results.append(CheckResult("gradient finite differences", worst, 1e-5))

    worst = 0.0
    K = DenseOperator(rng.standard_normal((15, 25)))
    for _ in range(100):
        u, v = rng.standard_normal(25), rng.standard_normal(15)
        a, b = K.apply(u) @ v, u @ K.adjoint(v)
        worst = max(worst, abs(a - b) / max(abs(a), 1e-300))
    results.append(CheckResult("adjoint identity", worst, 1e-10))

    C = CountingOperator(K)
    C.apply(np.ones(25)), C.adjoint(np.ones(15)), C.apply(np.ones(25))
    results.append(CheckResult("matvec counting", abs(C.count - 3), 0.0))

    prob = gen_gaussian_problem(40, 120, 6, 0.02, seed)
    obj = Objective(prob.K, prob.y)
    lam = prox.lambda_max(prob.K, prob.y) / 8
    ref = reference_minimizer(prob.K, prob.y, lam)
    cfg = GPConfig()
    recs = []
    st = gpss_solve(obj, ref.rho, cfg, StopRule(max_iters=5000, stationarity_tol=1e-12),
                    callback=lambda r, x: recs.append(r))
    viol = gp_telemetry_violations(recs, cfg)
    for key, label in [("monotone", "monotone descent (M=1)"), ("bb_order", "BB ordering"),
                       ("alpha_range", "steplength clamping"), ("tau_ratio", "threshold dynamics"),
                       ("descent", "descent direction")]:
        results.append(CheckResult(label, viol[key], 0, f"{len(recs)} iterations"))
    feas = max(0.0, float(np.abs(st.x).sum()) - ref.rho)
    results.append(CheckResult("GPSS feasibility", feas, 1e-10))
    err = float(np.linalg.norm(st.x - ref.x_ref) / np.linalg.norm(ref.x_ref))
    results.append(CheckResult("GPSS vs reference", err, 1e-6, "lambda=lambda_max/8"))
    lam_back = prox.lambda_from_rho(prob.K, prob.y, st.x)
    results.append(CheckResult("lambda-rho round trip", abs(lam_back - lam) / lam, 1e-3))
    return results
