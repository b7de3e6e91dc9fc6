"""Benchmark orchestration and the command-line front end.

Solver labels in profiles are the run modes: "trans" (residuals aware of
re-queried values), "plain" (classical updating that ignores them), and
"clean" (identity schedule baseline).  Every run writes the fixed-schema
run CSV plus a JSON sidecar carrying the labels and normalization data
the profile step needs.
"""

from __future__ import annotations

import argparse
import glob
import json
import math
import os
import re
import sys

from . import problems as problem_lib
from . import profiles, verify
from .exceptions import DfotoError
from .solver import SolverConfig, minimize
from .transform_oracle import TransformationSchedule, TransformedOracle

RUN_MODES = ("trans", "plain", "clean")

_COEFF_RE = re.compile(r"^([0-9.eE+-]+)(?:([*/])k(?:\^([0-9]+))?)?$")


def parse_coefficient(text):
    """Parse 'A', 'A/k', 'A/k^2', 'A*k', 'A*k^2' into a map k -> value."""
    match = _COEFF_RE.match(text.strip())
    if not match:
        raise ValueError(f"cannot parse schedule coefficient {text!r}")
    value = float(match.group(1))
    op, power = match.group(2), int(match.group(3) or 1)
    if op is None:
        return lambda k: value
    if op == "/":
        return lambda k: value / k**power
    return lambda k: value * k**power


def parse_schedule(text, seed):
    """Build a schedule from 'identity' or 'affine:C=...,b=...,u=...'."""
    text = text.strip()
    if text == "identity":
        return TransformationSchedule.identity(seed=seed)
    kind, _, body = text.partition(":")
    if kind != "affine" or not body:
        raise ValueError(f"unknown schedule spec {text!r}")
    params = {}
    for item in body.split(","):
        key, _, val = item.partition("=")
        if key.strip() not in ("C", "b", "u") or not val:
            raise ValueError(f"bad schedule parameter {item!r}")
        params[key.strip()] = val.strip()
    missing = {"C", "b", "u"} - set(params)
    if missing:
        raise ValueError(f"schedule spec missing {sorted(missing)}")
    return TransformationSchedule.stochastic_affine(
        C=float(params["C"]),
        laplace_scale=parse_coefficient(params["b"]),
        uniform_halfwidth=parse_coefficient(params["u"]),
        seed=seed,
    )


DEFAULT_SCHEDULE = "affine:C=100,b=100/k,u=1/k"


def run_single(problem, mode, schedule_text=DEFAULT_SCHEDULE, rho_beg=1e-1,
               rho_end=1e-8, max_nf=10000, seed=0, m=0, sigma=0.0,
               drop_rule="distance"):
    """One solver run on one problem; returns (result, oracle)."""
    if mode not in RUN_MODES:
        raise ValueError(f"mode must be one of {RUN_MODES}")
    schedule = (
        TransformationSchedule.identity(seed=seed)
        if mode == "clean"
        else parse_schedule(schedule_text, seed)
    )
    solver_mode = "trans" if mode == "clean" else mode
    config = SolverConfig(
        n=problem.n, m=m, rho_beg=rho_beg, rho_end=rho_end, max_nf=max_nf,
        sigma=sigma, mode=solver_mode, drop_rule=drop_rule, seed=seed,
    )
    oracle = TransformedOracle(problem.objective, schedule, name=problem.name)
    result = minimize(config, oracle, problem.x_start)
    return result, oracle


def write_run(result, problem, mode, schedule_text, seed, out_path):
    result.write_csv(out_path)
    meta = {
        "problem": problem.name,
        "n": problem.n,
        "mode": mode,
        "schedule": schedule_text,
        "seed": seed,
        "f_start": problem.f_start,
        "f_best_known": problem.f_best_known,
        "f_best_found": result.f_best_true,
        "nf": result.nf,
        "iterations": result.iterations,
        "termination": result.termination,
    }
    with open(_meta_path(out_path), "w") as fh:
        json.dump(meta, fh, indent=1, sort_keys=True)
        fh.write("\n")


def _meta_path(csv_path):
    return csv_path + ".meta.json"


def _read_run(csv_path):
    with open(_meta_path(csv_path)) as fh:
        meta = json.load(fh)
    history = []
    with open(csv_path) as fh:
        rows = fh.read().splitlines()[1:]
    for row in rows:
        cells = row.split(",")
        history.append((int(cells[1]), float(cells[8])))
    return meta, history


def profile_from_runs(run_paths, taus):
    """ProfileTables (one per tau) from run CSVs and their sidecars.

    Normalization uses the known best value when the sidecar has one,
    otherwise the best value found by any run on the problem.
    """
    runs = [_read_run(p) for p in run_paths]
    best_found = {}
    for meta, history in runs:
        low = min(v for _, v in history)
        key = meta["problem"]
        best_found[key] = min(best_found.get(key, math.inf), low)
    tables = []
    for tau in taus:
        table = profiles.ProfileTable(tau=tau)
        for meta, history in runs:
            f_best = meta.get("f_best_known")
            if f_best is None:
                f_best = best_found[meta["problem"]]
            f_start = meta["f_start"]
            if not f_best < f_start:
                cost = None
            else:
                cost = profiles.evaluations_to_accuracy(history, f_start, f_best, tau)
            table.add(meta["mode"], meta["problem"], cost)
        tables.append(table)
    return tables


def run_suite(problem_list, modes, schedule_text=DEFAULT_SCHEDULE, taus=(1e-3,),
              out_dir=None, seed=0, max_nf=10000, rho_beg=1e-1, rho_end=1e-8):
    """All (problem, mode) runs with shared starts, plus profile tables."""
    run_records = []
    for problem in problem_list:
        for mode in modes:
            result, _ = run_single(
                problem, mode, schedule_text, rho_beg=rho_beg, rho_end=rho_end,
                max_nf=max_nf, seed=seed,
            )
            run_records.append((problem, mode, result))
            if out_dir is not None:
                path = os.path.join(out_dir, f"{problem.name}_n{problem.n}_{mode}_s{seed}.csv")
                write_run(result, problem, mode, schedule_text, seed, path)

    best_found = {}
    for problem, _, result in run_records:
        low = min(rec.f_best_true for rec in result.history)
        best_found[problem.name] = min(best_found.get(problem.name, math.inf), low)

    tables = []
    for tau in taus:
        table = profiles.ProfileTable(tau=tau)
        for problem, mode, result in run_records:
            f_best = problem.f_best_known
            if f_best is None:
                f_best = best_found[problem.name]
            if not f_best < problem.f_start:
                cost = None
            else:
                cost = profiles.evaluations_to_accuracy(
                    result.history, problem.f_start, f_best, tau
                )
            table.add(mode, problem.name, cost)
        tables.append(table)
    return run_records, tables


def sensitivity_stats(problem, mode, m_perms, seed, tau,
                      schedule_text=DEFAULT_SCHEDULE, max_nf=10000,
                      oracle_seed=0):
    """mean(NF) and std(NF) across random coordinate permutations.

    Every permuted run shares the oracle seed, so stochastic schedules
    apply identical draws and only the coordinate labeling varies.
    Returns (mean, std, n_failures); failed runs are excluded from the
    moments and counted.
    """
    if m_perms < 2:
        raise ValueError("sensitivity needs at least 2 permutations")
    perms = profiles.random_permutations(problem.n, m_perms, seed)
    f_best = problem.f_best_known
    if f_best is None:
        raise DfotoError(
            f"sensitivity on {problem.name} needs a known best value"
        )
    counts, failures = [], 0
    for perm in perms:
        objective, x_start = profiles.permuted_problem(
            problem.objective, problem.x_start, perm
        )
        instance = problem_lib.TestProblem(
            name=problem.name, n=problem.n, objective=objective,
            x_start=x_start, f_best_known=f_best,
        )
        try:
            result, _ = run_single(
                instance, mode, schedule_text, max_nf=max_nf, seed=oracle_seed
            )
            cost = profiles.evaluations_to_accuracy(
                result.history, instance.f_start, f_best, tau
            )
        except DfotoError:
            cost = None
        if cost is None:
            failures += 1
        else:
            counts.append(cost)
    if not counts:
        return math.nan, math.nan, failures
    mean, std = profiles.std_nf(counts)
    return mean, std, failures


# ---------------------------------------------------------------------------
# Command-line interface
# ---------------------------------------------------------------------------


def _parse_taus(text):
    """'1e-1..1e-6' expands decades; otherwise comma-separated values."""
    text = text.strip()
    if ".." in text:
        lo_text, hi_text = text.split("..", 1)
        lo, hi = float(lo_text), float(hi_text)
        taus = []
        t = lo
        while t >= hi * (1 - 1e-12):
            taus.append(t)
            t /= 10.0
        return taus
    return [float(v) for v in text.split(",")]


def _cmd_solve(args):
    problem = problem_lib.get_problem(args.problem, args.n)
    result, oracle = run_single(
        problem, args.mode, args.schedule, rho_beg=args.rhobeg,
        rho_end=args.rhoend, max_nf=args.maxfun, seed=args.seed,
    )
    if args.out:
        write_run(result, problem, args.mode, args.schedule, args.seed, args.out)
    if args.oracle_log:
        oracle.log.write_csv(args.oracle_log)
    print(
        f"{problem.name} n={problem.n} mode={args.mode}: "
        f"f_best_true={result.f_best_true:.6e} nf={result.nf} "
        f"iterations={result.iterations} termination={result.termination}"
    )
    return 0


def _cmd_profile(args):
    paths = sorted(glob.glob(os.path.join(args.in_dir, "*.csv")))
    paths = [p for p in paths if os.path.exists(_meta_path(p))]
    if not paths:
        print(f"no runs with sidecar metadata under {args.in_dir}", file=sys.stderr)
        return 1
    tables = profile_from_runs(paths, _parse_taus(args.tau))
    rows = []
    for table in tables:
        alphas, curves = profiles.performance_profile(table)
        for solver in sorted(curves):
            for alpha, pi in zip(alphas, curves[solver]):
                rows.append((solver, table.tau, alpha, pi))
    with open(args.out, "w", newline="") as fh:
        fh.write("solver,tau,alpha,pi\n")
        for solver, tau, alpha, pi in rows:
            fh.write(f"{solver},{tau!r},{float(alpha)!r},{float(pi)!r}\n")
    print(f"wrote {args.out} ({len(rows)} rows from {len(paths)} runs)")
    return 0


def _cmd_sensitivity(args):
    problem = problem_lib.get_problem(args.problem, args.n)
    modes = args.modes.split(",")
    stats = {}
    for mode in modes:
        mean, std, failures = sensitivity_stats(
            problem, mode, args.M, args.seed, args.tau,
            schedule_text=args.schedule, max_nf=args.maxfun,
            oracle_seed=args.oracle_seed,
        )
        stats[mode] = (mean, std, failures)
        print(
            f"{problem.name} mode={mode}: mean(NF)={mean:.2f} std(NF)={std:.4f} "
            f"failures={failures}/{args.M}"
        )
    table = profiles.ProfileTable(tau=args.tau)
    for mode, (mean, std, failures) in stats.items():
        table.add(mode, problem.name, None if failures else std)
    alphas, curves = profiles.performance_profile(table)
    with open(args.out, "w", newline="") as fh:
        fh.write("solver,tau,mean_nf,std_nf,failures,alpha,sigma\n")
        for mode in sorted(curves):
            mean, std, failures = stats[mode]
            for alpha, sigma in zip(alphas, curves[mode]):
                fh.write(
                    f"{mode},{args.tau!r},{mean!r},{std!r},{failures},"
                    f"{float(alpha)!r},{float(sigma)!r}\n"
                )
    print(f"wrote {args.out}")
    return 0


def _cmd_verify(args):
    checks = verify.run_suite(args.suite)
    width = max(len(name) for name, _, _ in checks)
    failures = 0
    for name, ok, detail in checks:
        status = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        line = f"[{status}] {name:<{width}}"
        if detail:
            line += f"  {detail}"
        print(line)
    print(f"{len(checks) - failures}/{len(checks)} checks passed")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="dfoto",
        description="Derivative-free trust-region solver for step-transformed objectives",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="run the solver on one test problem")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--mode", choices=RUN_MODES, default="trans")
    p.add_argument("--schedule", default=DEFAULT_SCHEDULE)
    p.add_argument("--rhobeg", type=float, default=1e-1)
    p.add_argument("--rhoend", type=float, default=1e-8)
    p.add_argument("--maxfun", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", default=None, help="run record CSV path")
    p.add_argument("--oracle-log", default=None, help="per-evaluation log CSV path")
    p.set_defaults(fn=_cmd_solve)

    p = sub.add_parser("profile", help="performance profiles from stored runs")
    p.add_argument("--tau", default="1e-1..1e-6")
    p.add_argument("--in", dest="in_dir", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_profile)

    p = sub.add_parser("sensitivity", help="std(NF) across coordinate permutations")
    p.add_argument("--problem", required=True)
    p.add_argument("--n", type=int, default=10)
    p.add_argument("--M", type=int, default=100)
    p.add_argument("--tau", type=float, default=1e-4)
    p.add_argument("--modes", default="trans,clean")
    p.add_argument("--schedule", default=DEFAULT_SCHEDULE)
    p.add_argument("--maxfun", type=int, default=10000)
    p.add_argument("--seed", type=int, default=0, help="permutation seed")
    p.add_argument("--oracle-seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(fn=_cmd_sensitivity)

    p = sub.add_parser("verify", help="run a theory-verification suite")
    p.add_argument("--suite", choices=verify.SUITES, required=True)
    p.set_defaults(fn=_cmd_verify)

    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.fn(args)
    except (DfotoError, ValueError, KeyError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
