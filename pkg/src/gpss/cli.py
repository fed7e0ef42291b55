"""Command-line front end: ``gpss {generate,solve,isochrone,verify}``.

Exit codes: 0 success, 1 failed verification, 2 usage error,
3 computation failure. Options may also come from a JSON file given with
``--config`` (keys are the option names with dashes replaced by
underscores); explicit flags win. Relative output paths are placed under
``$GPSS_OUTPUT_DIR`` when that variable is set.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import bench, operator, prox
from .solvers import PENALIZED, SOLVERS, GPConfig, Objective, StopRule

log = logging.getLogger("gpss")

EXIT_OK = 0
EXIT_VERIFY_FAILED = 1
EXIT_USAGE = 2
EXIT_COMPUTE = 3

OUTPUT_ENV = "GPSS_OUTPUT_DIR"


class UsageError(Exception):
    pass


def _csv_numbers(text, kind=float):
    try:
        return [kind(t) for t in str(text).split(",") if t.strip()]
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from exc


def _int_list(text):
    return _csv_numbers(text, int)


def _output_path(path):
    path = Path(path)
    base = os.environ.get(OUTPUT_ENV)
    if base and not path.is_absolute():
        path = Path(base) / path
    path.parent.mkdir(parents=True, exist_ok=True)
    return path


def _add_stop_args(p):
    p.add_argument("--tol", type=float, default=1e-9, help="stationarity tolerance (inf-norm)")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--max-matvecs", type=int, default=None)
    p.add_argument("--max-seconds", type=float, default=None)


def _add_gp_args(p):
    d = GPConfig()
    p.add_argument("--beta", type=float, default=d.beta)
    p.add_argument("--theta", type=float, default=d.theta)
    p.add_argument("--M", type=int, default=d.M, dest="M")
    p.add_argument("--alpha-min", type=float, default=d.alpha_min)
    p.add_argument("--alpha-max", type=float, default=d.alpha_max)
    p.add_argument("--tau1", type=float, default=d.tau_1)
    p.add_argument("--M-alpha", type=int, default=d.M_alpha, dest="M_alpha")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpss", description=__doc__.splitlines()[0])
    parser.add_argument("--config", help="JSON file with option defaults")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="write a synthetic test problem")
    g.add_argument("--family", choices=["gaussian", "illcond"], default="gaussian")
    g.add_argument("--n", type=int, default=231)
    g.add_argument("--p", type=int, default=1024)
    g.add_argument("--nnz", type=int, default=32)
    g.add_argument("--noise", type=float, default=0.02)
    g.add_argument("--decay", type=float, default=0.93)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", default="problem.bin")

    s = sub.add_parser("solve", help="run one solver on one problem")
    s.add_argument("--problem", required=True)
    s.add_argument("--solver", default="gpss")
    s.add_argument("--lambda", type=float, default=None, dest="lam")
    s.add_argument("--rho", type=float, default=None)
    s.add_argument("--reference", action="store_true",
                   help="also report the relative error to a certified lasso minimizer")
    _add_stop_args(s)
    _add_gp_args(s)
    s.add_argument("--out", default="solution.json")
    s.add_argument("--telemetry", default=None, help="newline-delimited JSON per iteration")
    s.add_argument("--timing", action="store_true", help="include wall-clock times in outputs")

    i = sub.add_parser("isochrone", help="approximation-isochrone campaign")
    i.add_argument("--problem", required=True)
    i.add_argument("--solvers", default="ista,fista,psd,gpss")
    i.add_argument("--grid-count", type=int, default=50)
    i.add_argument("--min-exp", type=float, default=0.5)
    i.add_argument("--max-exp", type=float, default=16.0)
    i.add_argument("--budget-matvecs", type=_int_list, default=None)
    i.add_argument("--budget-seconds", type=_csv_numbers, default=None)
    i.add_argument("--oracle-tol", type=float, default=1e-12)
    i.add_argument("--jobs", type=int, default=1)
    i.add_argument("--cache", default=None, help="directory for cached reference minimizers")
    _add_gp_args(i)
    i.add_argument("--out", default="isochrones.csv")
    i.add_argument("--format", choices=["csv", "json"], default=None)
    i.add_argument("--timing", action="store_true", help="fill the seconds column")

    v = sub.add_parser("verify", help="run the built-in invariant checks")
    v.add_argument("--seed", type=int, default=0)
    parser.subcommands = {"generate": g, "solve": s, "isochrone": i, "verify": v}
    return parser


def _apply_config(parser, argv):
    """Parse `argv`, using values from a ``--config`` JSON file as defaults."""
    argv = sys.argv[1:] if argv is None else list(argv)
    pre = argparse.ArgumentParser(add_help=False)
    pre.add_argument("--config")
    known, _ = pre.parse_known_args(argv)
    if not known.config:
        return parser.parse_args(argv)
    command = next((a for a in argv if a in parser.subcommands), None)
    if command is None:
        return parser.parse_args(argv)
    try:
        conf = json.loads(Path(known.config).read_text())
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot read config {known.config}: {exc}") from exc
    if not isinstance(conf, dict):
        raise UsageError("config file must hold a JSON object")
    subparser = parser.subcommands[command]
    actions = {a.dest: a for a in subparser._actions}
    unknown = sorted(set(conf) - set(actions) - {"help"})
    if unknown:
        raise UsageError(f"unknown config keys for {command!r}: {', '.join(unknown)}")
    try:
        values = {k: _coerce(actions[k], v) for k, v in conf.items()}
    except (TypeError, ValueError, argparse.ArgumentTypeError) as exc:
        raise UsageError(f"bad value in config {known.config}: {exc}") from exc
    for key in values:
        actions[key].required = False
    subparser.set_defaults(**values)
    return parser.parse_args(argv)


def _coerce(action, value):
    if action.type is not None and isinstance(value, str):
        return action.type(value)
    if isinstance(value, list) and action.type in (_int_list, _csv_numbers):
        return action.type(",".join(str(v) for v in value))
    return value


def _gp_config(args) -> GPConfig:
    try:
        return GPConfig(beta=args.beta, theta=args.theta, M=args.M, alpha_min=args.alpha_min,
                        alpha_max=args.alpha_max, tau_1=args.tau1, M_alpha=args.M_alpha)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def cmd_generate(args) -> int:
    if args.n < 1 or args.p < 1:
        raise UsageError("--n and --p must be positive")
    if not 0 <= args.nnz <= args.p:
        raise UsageError(f"--nnz must lie in [0, p={args.p}], got {args.nnz}")
    if args.noise < 0:
        raise UsageError("--noise must be nonnegative")
    if args.family == "gaussian":
        prob = operator.gen_gaussian_problem(args.n, args.p, args.nnz, args.noise, args.seed)
    else:
        if not 0 < args.decay < 1:
            raise UsageError("--decay must lie in (0, 1)")
        prob = operator.gen_illconditioned_problem(args.n, args.p, args.nnz, args.decay,
                                                   args.noise, args.seed)
    out = _output_path(args.out)
    operator.save_problem(prob, out)
    print(f"wrote {out}  n={prob.n} p={prob.p} nnz={args.nnz} seed={prob.seed}")
    print(f"lambda_max = {prox.lambda_max(prob.K, prob.y):.17g}")
    print(f"||K|| (power iteration) = {operator.spectral_norm_estimate(prob.K):.17g}")
    return EXIT_OK


def _load(path):
    try:
        return operator.load_problem(path)
    except (OSError, ValueError) as exc:
        raise UsageError(f"cannot load problem {path}: {exc}") from exc


def cmd_solve(args) -> int:
    name = args.solver.lower()
    if name not in SOLVERS:
        raise UsageError(f"unknown solver {args.solver!r}; choose from {{ista, fista, psd, gpss}}")
    if (args.lam is None) == (args.rho is None):
        raise UsageError("give exactly one of --lambda and --rho")
    if args.lam is not None and args.lam < 0 or args.rho is not None and args.rho < 0:
        raise UsageError("--lambda and --rho must be nonnegative")
    prob = _load(args.problem)
    cfg = _gp_config(args)
    try:
        stop = StopRule(max_iters=args.max_iters, max_matvecs=args.max_matvecs,
                        max_seconds=args.max_seconds, stationarity_tol=args.tol)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    obj = Objective(prob.K, prob.y)
    lam, rho = args.lam, args.rho
    ref = None
    if lam is not None and (name not in PENALIZED or args.reference):
        ref = bench.reference_minimizer(prob.K, prob.y, lam)
        if name not in PENALIZED:
            rho = ref.rho
            print(f"converted lambda={lam:.17g} to rho={rho:.17g} (reference minimizer)")
            log.info("lambda=%.17g converted to rho=%.17g via the reference minimizer", lam, rho)
    elif rho is not None and name in PENALIZED:
        x_rho = SOLVERS["gpss"](obj, rho=rho, cfg=cfg,
                                stop=StopRule(max_iters=None, max_matvecs=2_000_000,
                                              stationarity_tol=1e-12)).x
        lam = prox.lambda_from_rho(prob.K, prob.y, x_rho)
        print(f"converted rho={rho:.17g} to lambda={lam:.17g} (lambda_from_rho)")
        log.info("rho=%.17g converted to lambda=%.17g via lambda_from_rho", rho, lam)
        if args.reference:
            ref = bench.reference_minimizer(prob.K, prob.y, lam)
    elif args.reference:
        log.warning("--reference needs --lambda for constrained solvers; skipped")

    tele = None
    if args.telemetry:
        tele = open(_output_path(args.telemetry), "w")

    def cb(rec, x):
        tele.write(json.dumps(rec.to_dict(timing=args.timing)) + "\n")

    try:
        state = SOLVERS[name](obj, lam=lam, rho=rho, cfg=cfg, stop=stop,
                              callback=cb if tele else None)
    finally:
        if tele:
            tele.close()

    summary = {
        "solver": name,
        "lambda": lam,
        "rho": rho,
        "objective": state.f,
        "iterations": state.k,
        "matvecs": state.matvecs,
        "stop_reason": state.reason,
        "stationarity": state.stationarity,
        "l1_norm": prox.rho_from_lambda(state.x),
    }
    if name not in PENALIZED:
        summary["stationarity_residual"] = obj.projected_stationarity(state.x, rho)
    else:
        summary["stationarity_residual"] = obj.prox_stationarity(state.x, lam)
    if ref is not None and np.any(ref.x_ref):
        summary["rel_error"] = float(np.linalg.norm(state.x - ref.x_ref)
                                     / np.linalg.norm(ref.x_ref))
    if args.timing:
        summary["seconds"] = state.elapsed
    out = _output_path(args.out)
    out.write_text(json.dumps({"summary": summary, "x": state.x.tolist()}, indent=1) + "\n")
    for k, v in summary.items():
        print(f"{k:22s} {v}")
    return EXIT_OK


def cmd_isochrone(args) -> int:
    solvers = [s.strip().lower() for s in args.solvers.split(",") if s.strip()]
    bad = [s for s in solvers if s not in SOLVERS]
    if bad or not solvers:
        raise UsageError(f"unknown solver(s) {bad}; choose from {{ista, fista, psd, gpss}}")
    if not args.budget_matvecs and not args.budget_seconds:
        raise UsageError("give --budget-matvecs and/or --budget-seconds")
    if args.budget_matvecs and min(args.budget_matvecs) < 0:
        raise UsageError("budgets must be nonnegative")
    if args.grid_count < 2 or not args.min_exp < args.max_exp:
        raise UsageError("need --grid-count >= 2 and --min-exp < --max-exp")
    prob = _load(args.problem)
    cfg = _gp_config(args)
    grid = bench.build_grid(prob.K, prob.y, args.grid_count, args.min_exp, args.max_exp)
    pid = operator.problem_hash(prob)
    refs = bench.compute_references(prob.K, prob.y, grid, args.oracle_tol, args.jobs,
                                    cache_dir=args.cache, problem_id=pid)
    records = bench.run_isochrones(prob, grid, refs, solvers, args.budget_matvecs or (),
                                   args.budget_seconds or (), cfg=cfg, jobs=args.jobs)
    out = bench.emit_isochrone_table(records, _output_path(args.out), args.format,
                                     timing=args.timing)
    print(f"wrote {len(records)} rows to {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .verify import run_checks

    results = run_checks(seed=args.seed)
    for r in results:
        print(r.line())
    failed = [r for r in results if not r.passed]
    print(f"{len(results) - len(failed)}/{len(results)} checks passed")
    return EXIT_VERIFY_FAILED if failed else EXIT_OK


COMMANDS = {
    "generate": cmd_generate,
    "solve": cmd_solve,
    "isochrone": cmd_isochrone,
    "verify": cmd_verify,
}


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = _apply_config(parser, argv)
    except SystemExit as exc:
        return EXIT_USAGE if exc.code else EXIT_OK
    except UsageError as exc:
        print(f"gpss: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"gpss {args.command}: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (bench.ReferenceError, ArithmeticError, RuntimeError, OSError) as exc:
        print(f"gpss {args.command}: failed: {exc}", file=sys.stderr)
        return EXIT_COMPUTE


if __name__ == "__main__":
    sys.exit(main())
