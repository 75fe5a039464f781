"""Command-line front end.

Subcommands: ``discover``, ``catalog``, ``run``, ``sweep`` and ``record``.
Exit status 0 on success, 1 on usage errors, 2 when discovery finds no
formula and 3 when a run diverges.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

from .core import Diverged, RunConfig, run
from .flows import SamplingGrid, make_flow_set, record_flow, write_replay
from .formulas import (
    FormulaNotFound,
    FormulaNotPresent,
    FormulaType,
    SearchConfig,
    append_catalog,
    catalog,
    discover_formula,
    is_convergent,
    lookup,
    read_catalog,
)
from .problems import make_problem

EXIT_OK, EXIT_USAGE, EXIT_NOT_FOUND, EXIT_DIVERGED = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def read_config(path: str) -> dict[str, str]:
    """Plain ``key = value`` lines; ``#`` starts a comment."""
    out = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, sep, value = line.partition("=")
            if not sep:
                raise UsageError(f"{path}:{lineno}: expected 'key = value'")
            out[key.strip().replace("-", "_")] = value.strip()
    return out


def _fmt(x) -> str:
    return "%.17g" % x


# -- discover / catalog ----------------------------------------------------


def _report(f, out):
    rep = is_convergent(f)
    out.write(f"type {f.ftype}: taucoeff {_fmt(f.taucoeff)}\n")
    out.write("  weights  " + " ".join(_fmt(w) for w in f.weights) + "\n")
    out.write("  polyrest " + " ".join(_fmt(p) for p in f.polyrest) + "\n")
    out.write(f"  p(1) = {rep.p_at_one:.3g}, convergent: {rep.convergent} ({rep.reason})\n")
    out.write(f"  max |root| = {rep.max_modulus:.15g}, second |root| = {rep.second_modulus:.15g}\n")
    for z in sorted(rep.roots, key=lambda z: -abs(z)):
        out.write(f"    root {z.real:+.15f} {z.imag:+.15f}i  |z| = {abs(z):.15f}\n")


def cmd_discover(args) -> int:
    ftype = FormulaType.parse(args.ftype)
    search = SearchConfig(max_outer=args.seeds, eps_conv=args.eps, extra_orders=args.extra_orders)
    try:
        f = discover_formula(ftype, search, rng_seed=args.rng)
    except FormulaNotFound as exc:
        print(f"NotFound: {exc}")
        if exc.best is not None:
            print("best candidate:")
            _report(exc.best, sys.stdout)
        return EXIT_NOT_FOUND
    _report(f, sys.stdout)
    path = args.catalog or _first_env_catalog()
    if path:
        append_catalog(path, f)
        print(f"appended to {path}")
    return EXIT_OK


def _first_env_catalog():
    env = os.environ.get("ZNN_CATALOG", "")
    parts = [p for p in env.split(os.pathsep) if p]
    return parts[0] if parts else None


def cmd_catalog(args) -> int:
    formulas = catalog(args.catalog or ())
    if args.ftype:
        try:
            formulas = [lookup(args.ftype, args.catalog or ())]
        except FormulaNotPresent as exc:
            print(f"NotPresent: {exc.args[0]}")
            return EXIT_NOT_FOUND
    for f in formulas:
        _report(f, sys.stdout)
    return EXIT_OK


# -- run / sweep -----------------------------------------------------------


def _formula(name, extra):
    if os.path.exists(name):
        fs = read_catalog(name)
        if len(fs) != 1:
            raise UsageError(f"{name} must hold exactly one formula")
        return fs[0]
    try:
        return lookup(name, extra or ())
    except FormulaNotPresent:
        raise UsageError(f"formula {name} is not in the catalog") from None
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _deriv(text):
    mode, _, order = text.partition(":")
    if mode not in ("auto", "analytic", "backward"):
        raise UsageError(f"bad derivative source {text!r}")
    return mode, (int(order) if order else None)


def build_job(ns) -> dict:
    """Plain, picklable description of one run."""
    if ns.eta is not None and ns.h is not None:
        raise UsageError("give --eta or --h, not both")
    return dict(
        problem=ns.problem,
        flow=ns.flow,
        formula=ns.formula,
        catalog=ns.catalog,
        tau=ns.tau,
        eta=ns.eta,
        h=ns.h,
        t0=ns.t0,
        tf=ns.tf,
        start=ns.start,
        rng=ns.rng,
        deriv=ns.deriv,
        record_solution=ns.record_solution,
        oracle=ns.oracle,
    )


def execute(job: dict):
    """Run one job; returns the trace and the exception (if it diverged)."""
    try:
        problem = make_problem(job["problem"])
        flows = make_flow_set(job["flow"])
        grid = SamplingGrid(job["t0"], job["tf"], job["tau"])
    except (KeyError, ValueError) as exc:
        raise UsageError(str(exc.args[0] if exc.args else exc)) from None
    for fl in flows.values():
        if hasattr(fl, "check_grid"):
            fl.check_grid(grid)
    mode, order = _deriv(job["deriv"])
    try:
        config = RunConfig(
            formula=_formula(job["formula"], job["catalog"]),
            grid=grid,
            eta=job["eta"],
            h=job["h"],
            start=job["start"],
            rng_seed=job["rng"],
            derivative=mode,
            deriv_order=order,
            record_solution=job["record_solution"],
            track_oracle=job["oracle"],
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    try:
        return run(problem, flows, config), None
    except Diverged as exc:
        return exc.trace, exc


def cmd_run(args) -> int:
    job = build_job(args)
    trace, err = execute(job)
    trace.header = {"problem": trace.header.pop("problem"), "flow": job["flow"], **trace.header}
    if args.out:
        trace.to_csv(args.out, oracle=args.oracle)
    else:
        trace.to_csv(sys.stdout, oracle=args.oracle)
    summary = sys.stderr if not args.out else sys.stdout
    if err is not None:
        summary.write(f"{err}\n")
        return EXIT_DIVERGED
    if math.isnan(trace.steady_state()):
        level = "n/a (run shorter than the 5/eta burn-in)"
    else:
        level = f"{trace.steady_state():.3e} (max {trace.steady_state_max():.3e})"
    summary.write(
        f"steps {len(trace)}  steady-state relative residual {level}  final {trace.relative[-1]:.3e}\n"
        f"wall time {trace.wall_time:.3f} s  ({trace.steps_per_second():.0f} steps/s)\n"
    )
    return EXIT_OK


def _sweep_one(job):
    try:
        trace, err = execute(job)
    except Exception as exc:  # report and keep sweeping
        return dict(error=str(exc))
    if err is not None:
        return dict(diverged=True, diverged_at=err.k, wall_time=trace.wall_time,
                    eta=float(trace.header["eta"]))
    return dict(
        diverged=False,
        steady=trace.steady_state(),
        steady_max=trace.steady_state_max(),
        final=float(trace.relative[-1]),
        wall_time=trace.wall_time,
        eta=float(trace.header["eta"]),
    )


def cmd_sweep(args) -> int:
    values = [float(v) for v in args.values.split(",") if v.strip()]
    if len(values) < 2:
        raise UsageError("a sweep needs at least two values")
    base = build_job(args)
    jobs = []
    for v in values:
        job = dict(base)
        if args.vary == "tau":
            job["tau"] = v
        elif args.vary == "eta":
            job["eta"], job["h"] = v, None
        else:
            job["h"], job["eta"] = v, None
        jobs.append(job)
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]

    fh = open(args.out, "w") if args.out else sys.stdout
    try:
        fh.write(f"# problem = {base['problem']}\n# flow = {base['flow']}\n# formula = {base['formula']}\n")
        fh.write(f"# vary = {args.vary}\n")
        fh.write("value,tau,eta,h,steady_state,steady_state_max,final,diverged,diverged_at,wall_time\n")
        best = None
        for v, job, r in zip(values, jobs, results):
            if "error" in r:
                fh.write(f"{_fmt(v)},,,,,,,error,,\n")
                continue
            tau, eta = job["tau"], r["eta"]
            row = [_fmt(v), _fmt(tau), _fmt(eta), _fmt(tau * eta)]
            if r["diverged"]:
                row += ["nan", "nan", "nan", "1", str(r["diverged_at"])]
            else:
                row += [_fmt(r["steady"]), _fmt(r["steady_max"]), _fmt(r["final"]), "0", ""]
                if best is None or r["steady"] < best[1]:
                    best = (v, r["steady"])
            row.append("%.3f" % r["wall_time"])
            fh.write(",".join(row) + "\n")
    finally:
        if args.out:
            fh.close()
    if best is not None:
        print(f"smallest steady-state residual {best[1]:.3e} at {args.vary} = {best[0]:g}", file=sys.stderr)
    return EXIT_OK


def cmd_record(args) -> int:
    flows = make_flow_set(args.flow)
    if args.key not in flows:
        raise UsageError(f"flow {args.flow} has no entry {args.key!r}; entries: {', '.join(flows)}")
    grid = SamplingGrid(args.t0, args.tf, args.tau)
    write_replay(args.out, record_flow(flows[args.key], grid, extra=args.extra))
    print(f"wrote {grid.steps + args.extra} samples of {args.key} to {args.out}")
    return EXIT_OK


# -- parser ----------------------------------------------------------------


def _run_flags(p):
    p.add_argument("--config", help="file of 'key = value' defaults")
    p.add_argument("--problem", default="linsys")
    p.add_argument("--flow", default="sym2")
    p.add_argument("--formula", default="2_3", help="catalog type j_s or a catalog file")
    p.add_argument("--catalog", action="append", help="extra catalog file (repeatable)")
    p.add_argument("--tau", type=float, default=0.02)
    p.add_argument("--eta", type=float)
    p.add_argument("--h", type=float, help="tau * eta (alternative to --eta)")
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--tf", type=float, default=10.0)
    p.add_argument("--start", choices=["oracle", "random"], default="oracle")
    p.add_argument("--rng", type=int, default=0)
    p.add_argument("--deriv", default="auto", help="auto | analytic | backward[:order]")
    p.add_argument("--record-solution", action="store_true")
    p.add_argument("--oracle", action="store_true", help="add the oracle_error column")
    p.add_argument("--out")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="znn", description="Discretized zeroing neural network solvers.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("discover", help="search for a convergent look-ahead formula")
    p.add_argument("ftype", help="formula type j_s")
    p.add_argument("--seeds", type=int, default=2000)
    p.add_argument("--rng", type=int, default=0)
    p.add_argument("--eps", type=float, default=1e-9)
    p.add_argument("--extra-orders", type=int, default=0)
    p.add_argument("--catalog", help="catalog file to append to (default: first entry of ZNN_CATALOG)")
    p.set_defaults(func=cmd_discover)

    p = sub.add_parser("catalog", help="list known formulas")
    p.add_argument("ftype", nargs="?")
    p.add_argument("--catalog", action="append")
    p.set_defaults(func=cmd_catalog)

    p = sub.add_parser("run", help="run one ZNN experiment and write its trace CSV")
    _run_flags(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("sweep", help="repeat a run over tau, eta or h values")
    _run_flags(p)
    p.add_argument("--vary", choices=["tau", "eta", "h"], required=True)
    p.add_argument("--values", required=True, help="comma separated values")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("record", help="write a replay log of one flow entry")
    p.add_argument("--flow", required=True)
    p.add_argument("--key", default="A")
    p.add_argument("--tau", type=float, default=0.02)
    p.add_argument("--t0", type=float, default=0.0)
    p.add_argument("--tf", type=float, default=10.0)
    p.add_argument("--extra", type=int, default=0, help="additional trailing samples")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_record)
    return parser


def _apply_config(parser, argv):
    """Load ``--config`` defaults into the chosen subparser, then reparse."""
    ns, _ = parser.parse_known_args(argv)
    path = getattr(ns, "config", None)
    if not path:
        return parser.parse_args(argv)
    cfg = read_config(path)
    sub = next(a for a in parser._actions if isinstance(a, argparse._SubParsersAction))
    subparser = sub.choices[ns.command]
    known = {a.dest for a in subparser._actions}
    unknown = sorted(set(cfg) - known)
    if unknown:
        raise UsageError(f"{path}: unknown keys {', '.join(unknown)}")
    for action in subparser._actions:
        if action.dest in cfg:
            raw = cfg[action.dest]
            if isinstance(action, argparse._StoreTrueAction):
                action.default = raw.lower() in ("1", "true", "yes", "on")
            elif isinstance(action, argparse._AppendAction):
                action.default = [p.strip() for p in raw.split(",") if p.strip()]
            else:
                action.default = raw
    return parser.parse_args(argv)


def main(argv=None) -> int:
    parser = build_parser()
    argv = sys.argv[1:] if argv is None else list(argv)
    try:
        args = _apply_config(parser, argv)
        return args.func(args)
    except SystemExit as exc:
        # argparse exits on --help and on usage errors
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    except UsageError as exc:
        print(f"znn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (OSError, ValueError, KeyError) as exc:
        print(f"znn: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
