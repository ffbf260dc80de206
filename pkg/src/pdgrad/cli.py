"""Benchmark command line.

Subcommands: ``solve`` (one seeded run), ``ensemble`` (seed replication
with mean/SE/quantile output), ``lowerbound`` (the bound-sandwich
experiment), ``validate`` (schedule condition slacks for a config), and
``plot`` (trace CSVs to a self-contained SVG).

Exit codes: 0 success, 1 usage/config error, 2 solver error, 3 failed
acceptance check (with ``--check``). Diagnostics go to stderr; machine
output goes to files only.
"""

import argparse
import hashlib
import os
import sys

import numpy as np

from . import schedules
from .config import ConfigError, build_problem, initial_point, load_config
from .pdg import run_pdg
from .plotsvg import render_series_svg, trace_series
from .rpdg import run_rpdg, run_rpdg_ensemble
from .trace import read_trace, write_trace
from .worstcase import WorstCaseSpec, min_dimension, run_bound_sandwich
from .wrappers import perturb_solve, smooth_solve, unconstrained_solve

CHECK_TOL = 1e-9


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _log(msg):
    print(msg, file=sys.stderr)


def _build_parser():
    p = _Parser(prog="pdgrad", description=__doc__)
    sub = p.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("solve", help="run one seeded solve from a config")
    sp.add_argument("--config", required=True)
    sp.add_argument("--seed", type=int, default=None, help="override the first config seed")
    sp.add_argument("--out", default=None, help="output directory override")
    sp.add_argument("--timing", action="store_true", help="record wall-clock (breaks byte determinism)")
    sp.add_argument("--check", action="store_true", help="verify the deterministic bound column")

    ep = sub.add_parser("ensemble", help="replicate a randomized solve across seeds")
    ep.add_argument("--config", required=True)
    ep.add_argument("--out", default=None)
    ep.add_argument("--check", action="store_true", help="verify mean <= bound + 3*SE")

    lp = sub.add_parser("lowerbound", help="bound-sandwich experiment on the worst-case family")
    lp.add_argument("--m", type=int, required=True)
    lp.add_argument("--Q", type=float, required=True, dest="q_cond")
    lp.add_argument("--mu", type=float, default=1.0)
    lp.add_argument("--seeds", type=int, default=50)
    lp.add_argument("--seed-base", type=int, default=0)
    lp.add_argument("--kmax", type=int, default=100)
    lp.add_argument("--ntilde", type=int, default=None, help="block size (default: minimum valid)")
    lp.add_argument("--schedule", choices=["uniform", "nonuniform"], default="uniform")
    lp.add_argument("--out", default=None)
    lp.add_argument("--check", action="store_true")

    vp = sub.add_parser("validate", help="print schedule condition slacks for a config")
    vp.add_argument("--config", required=True)

    pp = sub.add_parser("plot", help="render trace CSVs to an SVG")
    pp.add_argument("traces", nargs="+")
    pp.add_argument("--out", required=True)
    pp.add_argument("--x", choices=["t", "grad_evals"], default="t")
    pp.add_argument(
        "--fields",
        default="dist_P,bound_upper",
        help="comma list from: dist_P,obj,obj_ergodic,bound_upper,bound_lower",
    )
    return p


def _resolve_schedule(cfg, problem):
    kind = cfg.schedule
    if cfg.method == "pdg":
        if kind == "auto":
            kind = (
                schedules.PDG_STRONGLY_CONVEX
                if problem.mu > 0
                else schedules.PDG_NONSTRONGLY
            )
        if kind == schedules.PDG_STRONGLY_CONVEX:
            return schedules.pdg_sc_params(problem.lip_f, problem.mu)
        if kind == schedules.PDG_NONSTRONGLY:
            return schedules.pdg_nsc_schedule(problem.lip_f)
        raise ConfigError(f"schedule {kind} does not drive the deterministic solver")
    if cfg.method == "rpdg":
        if kind == "auto":
            kind = schedules.RPDG_NONUNIFORM
        if kind == schedules.RPDG_NONUNIFORM:
            return schedules.rpdg_nonuniform_params(problem.m, problem.lip, problem.mu)
        if kind == schedules.RPDG_UNIFORM:
            return schedules.rpdg_uniform_params(problem.m, problem.lip, problem.mu)
        raise ConfigError(f"schedule {kind} does not drive the randomized solver")
    raise ConfigError(f"method {cfg.method} picks its own schedule")


def _out_path(cfg, override, filename):
    out_dir = override or cfg.out_dir()
    os.makedirs(out_dir, exist_ok=True)
    return os.path.join(out_dir, filename)


def _cmd_solve(args):
    cfg = load_config(args.config)
    built = build_problem(cfg)
    seed = args.seed if args.seed is not None else cfg.seeds[0]

    if cfg.method == "smooth":
        spec, base = built
        if cfg.eps is None:
            raise ConfigError("[solver] smooth needs eps")
        res = smooth_solve(spec, base, cfg.eps, np.zeros(spec.n), seed=seed, k_max=cfg.k_max)
        tr = res.trace
        _log(f"smooth: delta={res.delta:g} budget={res.budget} objective={res.objective}")
    else:
        problem = built
        x0 = initial_point(cfg, problem.n)
        if cfg.method == "pdg":
            schedule = _resolve_schedule(cfg, problem)
            res = run_pdg(
                problem,
                schedule,
                x0,
                cfg.k_max,
                record_objective=cfg.record_objective,
                timing=args.timing,
            )
            tr = res.trace
        elif cfg.method == "rpdg":
            schedule = _resolve_schedule(cfg, problem)
            res = run_rpdg(
                problem,
                schedule,
                x0,
                cfg.k_max,
                seed,
                record_objective=cfg.record_objective,
                timing=args.timing,
            )
            tr = res.trace
        elif cfg.method == "perturb":
            if cfg.eps is None:
                raise ConfigError("[solver] perturb needs eps")
            res = perturb_solve(
                problem,
                cfg.eps,
                x0,
                mode="probability" if cfg.lam is not None else "expectation",
                lam=cfg.lam,
                seed=seed,
                k_max=cfg.k_max,
            )
            tr = res.trace
            _log(f"perturb: delta={res.delta:g} budget={res.budget} objective={res.objective}")
        elif cfg.method == "unconstrained":
            if cfg.eps_rel is None:
                raise ConfigError("[solver] unconstrained needs eps_rel")
            res = unconstrained_solve(
                problem, cfg.eps_rel, x0, seed=seed, k_max=cfg.k_max
            )
            tr = res.trace
            _log(f"unconstrained: delta={res.delta:g} budget={res.budget} r_ac={res.r_ac}")
        else:
            raise ConfigError(f"unknown method {cfg.method}")

    path = _out_path(cfg, args.out, f"solve_{cfg.method}_seed{seed}.csv")
    write_trace(path, tr)
    _log(f"trace written to {path}")

    if args.check:
        if cfg.method != "pdg":
            raise UsageError("--check on solve applies to the deterministic method only")
        have = np.isfinite(tr.dist_p) & np.isfinite(tr.bound_upper)
        viol = tr.dist_p[have] > tr.bound_upper[have] * (1.0 + CHECK_TOL)
        if np.any(viol):
            _log(f"bound check FAILED at {int(viol.sum())} iterations")
            return 3
        _log("bound check passed")
    return 0


def _cmd_ensemble(args):
    cfg = load_config(args.config)
    if cfg.method != "rpdg":
        raise ConfigError("ensemble runs the randomized method only")
    problem = build_problem(cfg)
    schedule = _resolve_schedule(cfg, problem)
    x0 = initial_point(cfg, problem.n)
    stats = run_rpdg_ensemble(
        problem,
        schedule,
        x0,
        cfg.k_max,
        cfg.seeds,
        record_objective=cfg.record_objective,
        workers=cfg.workers,
    )
    path = _out_path(cfg, args.out, "ensemble.csv")
    cols = (
        "t,grad_evals,dist_mean,dist_se,dist_q10,dist_q50,dist_q90,"
        "gap_mean,gap_se,bound_dist,bound_gap"
    )
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write(cols + "\n")
        for j in range(stats.t.shape[0]):
            row = [str(stats.t[j]), str(stats.grad_evals[j])] + [
                format(v[j], ".17g")
                for v in (
                    stats.dist_mean,
                    stats.dist_se,
                    stats.dist_q10,
                    stats.dist_q50,
                    stats.dist_q90,
                    stats.gap_mean,
                    stats.gap_se,
                    stats.bound_dist,
                    stats.bound_gap,
                )
            ]
            fh.write(",".join(row) + "\n")
    _log(f"ensemble stats ({stats.n_seeds} seeds) written to {path}")
    if args.check:
        ok = np.all(stats.dist_mean <= stats.bound_dist + 3.0 * stats.dist_se)
        if np.all(np.isfinite(stats.gap_mean)):
            ok = ok and np.all(stats.gap_mean <= stats.bound_gap + 3.0 * stats.gap_se)
        if not ok:
            _log("expectation bound check FAILED")
            return 3
        _log("expectation bound check passed")
    return 0


def _cmd_lowerbound(args):
    ntilde = args.ntilde
    if ntilde is None:
        ntilde = min_dimension(args.m, args.q_cond, args.kmax) // args.m
    spec = WorstCaseSpec(m=args.m, n_tilde=ntilde, mu=args.mu, big_q=args.q_cond)
    kind = (
        schedules.RPDG_UNIFORM
        if args.schedule == "uniform"
        else schedules.RPDG_NONUNIFORM
    )
    seeds = range(args.seed_base, args.seed_base + args.seeds)
    report = run_bound_sandwich(spec, kind, seeds, args.kmax)
    _log(report.header)
    out_dir = args.out or os.environ.get("PDGRAD_OUT", ".")
    os.makedirs(out_dir, exist_ok=True)
    path = os.path.join(out_dir, "lowerbound.csv")
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("t,ratio_mean,ratio_se,lower,upper\n")
        for j in range(report.t.shape[0]):
            fh.write(
                f"{report.t[j]},{format(report.ratio_mean[j], '.17g')},"
                f"{format(report.ratio_se[j], '.17g')},{format(report.lower[j], '.17g')},"
                f"{format(report.upper[j], '.17g')}\n"
            )
    _log(f"sandwich curves written to {path}")
    if report.crossing_evals is not None:
        _log(f"mean ratio crossed 1e-4 at {report.crossing_evals} gradient evaluations")
    if args.check and not report.ok:
        _log(
            f"sandwich check FAILED (lower_ok={report.lower_ok}, upper_ok={report.upper_ok})"
        )
        return 3
    if args.check:
        _log("sandwich check passed")
    return 0


def _cmd_validate(args):
    cfg = load_config(args.config)
    built = build_problem(cfg)
    if cfg.method == "smooth":
        raise ConfigError("validate applies to pdg/rpdg configs")
    problem = built
    schedule = _resolve_schedule(cfg, problem)
    if cfg.method == "rpdg":
        report = schedules.validate_rpdg_conditions(schedule, problem.lip, problem.mu)
    else:
        report = schedules.validate_pdg_conditions(
            schedule, problem.lip_f, problem.mu, t_max=max(cfg.k_max, 2)
        )
    for name, slack in report:
        _log(f"{name}: slack = {slack:.6e}")
    if not report.ok(1e-10):
        _log("schedule conditions FAILED")
        return 3
    _log("schedule conditions hold")
    return 0


def _cmd_plot(args):
    fields = [f.strip() for f in args.fields.split(",") if f.strip()]
    col_map = {
        "dist_P": "dist_p",
        "obj": "obj",
        "obj_ergodic": "obj_ergodic",
        "bound_upper": "bound_upper",
        "bound_lower": "bound_lower",
    }
    for f in fields:
        if f not in col_map:
            raise UsageError(f"unknown field {f!r}")
    digest_src = hashlib.sha256()
    series = []
    for path in args.traces:
        tr = read_trace(path)
        with open(path, "rb") as fh:
            digest_src.update(fh.read())
        base = os.path.basename(path)
        for f in fields:
            label = f"{base}:{f}" if len(args.traces) > 1 else f
            xs = tr.grad_evals if args.x == "grad_evals" else tr.t
            series.append((label, xs, getattr(tr, col_map[f])))
    digest_src.update(" ".join([args.x] + fields).encode())
    svg = render_series_svg(
        series,
        digest_src.hexdigest()[:16],
        x_label=args.x,
        y_label="value (log)",
    )
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(svg)
    _log(f"plot written to {args.out}")
    return 0


_COMMANDS = {
    "solve": _cmd_solve,
    "ensemble": _cmd_ensemble,
    "lowerbound": _cmd_lowerbound,
    "validate": _cmd_validate,
    "plot": _cmd_plot,
}


def main(argv=None):
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        _log(f"usage error: {exc}")
        return 1
    try:
        return _COMMANDS[args.command](args)
    except (ConfigError, UsageError) as exc:
        _log(f"usage error: {exc}")
        return 1
    except Exception as exc:  # solver-level failure
        _log(f"solver error: {exc}")
        return 2


if __name__ == "__main__":
    sys.exit(main())
