"""Command line entry point: gen, solve, simulate, experiment, report.

Exit codes: 0 success, 1 usage error, 2 invalid input, 3 oracle mismatch.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from . import io
from .core import VARIANTS, ModelParams, validate_state
from .experiment import (PLOT_COLUMNS, TRADEOFF_COLUMNS, ExperimentConfig, aggregate,
                         config_from_dict, config_to_dict, desk_config, plot_rows,
                         prefilter_tradeoff, read_rows, rows_to_csv, run_experiment,
                         summary_columns)
from .fixtures import FIXTURES
from .formulations import build, decode
from .instances import InstanceParams, desk_layout, gen_instance
from .oracle import brute_force_oracle
from .sim import POLICIES, TIE_BREAKS, SimError, SimParams, run
from .solver import SolverConfig, solve

EXIT_OK, EXIT_USAGE, EXIT_INVALID, EXIT_MISMATCH = 0, 1, 2, 3
VARIANT_ALIASES = {"split": "split_stations", "timesplit": "split_time"}


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


class InputError(Exception):
    pass


def _positive_int(s):
    v = int(s)
    if v < 1:
        raise argparse.ArgumentTypeError(f"expected a positive integer, got {s}")
    return v


def _prefilter_list(s):
    out = []
    for tok in s.split(","):
        tok = tok.strip()
        if tok in ("", "all", "none"):
            out.append(None)
        else:
            out.append(_positive_int(tok))
    return out


def _write(text: str, out):
    if out in (None, "-"):
        sys.stdout.write(text)
    else:
        Path(out).write_text(text)


def _layout_from_args(args):
    if getattr(args, "layout", None):
        return io.layout_from_dict(io.load(args.layout))
    return desk_layout(num_stations=args.stations, item_capacity=args.capacity,
                       num_robots=args.robots)


def _add_layout_flags(p):
    p.add_argument("--layout", help="layout JSON (default: desk layout from the flags below)")
    p.add_argument("--stations", type=_positive_int, default=2)
    p.add_argument("--capacity", type=_positive_int, default=6, help="station item capacity")
    p.add_argument("--robots", type=_positive_int, default=4)


# ----- subcommands ---------------------------------------------------------------------

def cmd_gen(args) -> int:
    params = InstanceParams(args.orders, args.skus, args.pods, args.alpha,
                            length_p=args.length_p, popularity_p=args.popularity_p, seed=args.seed)
    layout = _layout_from_args(args)
    inst = gen_instance(params, layout)
    _write(io.dumps(io.instance_to_dict(inst)), args.out)
    if args.layout_out:
        io.save(io.layout_to_dict(layout), args.layout_out)
    return EXIT_OK


def _load_state(args):
    if args.fixture:
        return FIXTURES[args.fixture]()
    if not args.state:
        raise InputError("give a state file or --fixture")
    return io.state_from_dict(io.load(args.state))


def cmd_solve(args) -> int:
    state = _load_state(args)
    bad = validate_state(state)
    if bad:
        raise InputError("invalid state: " + "; ".join(v.message for v in bad[:5]))
    variant = VARIANT_ALIASES.get(args.variant, args.variant)
    params = ModelParams(packing_capacity=args.packing)
    problem = build(state, variant, params)
    sol = solve(problem, SolverConfig(node_limit=args.node_limit, time_limit=args.time_limit))
    doc = {"variant": variant, "status": sol.status, "objective": sol.objective,
           "nodes": sol.nodes_explored}
    if sol.ok:
        doc["assignment"] = io.assignment_to_dict(decode(problem, sol.values))
    code = EXIT_OK
    if args.oracle:
        try:
            ref, _ = brute_force_oracle(state, variant, params)
        except ValueError as e:
            print(f"oracle skipped: {e}", file=sys.stderr)
            args.oracle = False
    if args.oracle:
        doc["oracle"] = ref
        if ref != (sol.objective if sol.status == "optimal" else None):
            code = EXIT_MISMATCH
            print(f"oracle mismatch: solver {sol.objective} ({sol.status}), oracle {ref}",
                  file=sys.stderr)
    _write(json.dumps(doc, indent=1, sort_keys=True) + "\n", args.out)
    print(f"objective {sol.objective} ({sol.status})", file=sys.stderr)
    return code


def cmd_simulate(args) -> int:
    inst = io.instance_from_dict(io.load(args.instance))
    layout = _layout_from_args(args)
    params = SimParams(solver=SolverConfig(node_limit=args.node_limit), prefilter=args.prefilter,
                       tie_break=args.tie_break, trace=bool(args.trace))
    rep = run(inst, layout, args.policy, params, seed=args.seed)
    row = rep.row()
    if args.no_wall_time:
        row["solver_time_t1"] = row["solver_time_rest"] = ""
    _write(rows_to_csv([row], tuple(row)), args.out)
    if args.trace:
        Path(args.trace).write_text(rep.trace_tsv())
    return EXIT_OK


def cmd_experiment(args) -> int:
    if args.config:
        cfg = config_from_dict(io.load(args.config))
    else:
        cfg = desk_config(seeds=args.desk_instances)
    over = {}
    if args.repetitions:
        over["repetitions"] = args.repetitions
    if args.prefilter:
        over["prefilter"] = tuple(args.prefilter)
    if args.methods:
        over["methods"] = tuple(args.methods.split(","))
    if args.seed_base is not None:
        over["seed_base"] = args.seed_base
    if args.no_wall_time:
        over["wall_time"] = False
    if over:
        cfg = ExperimentConfig(**{**cfg.__dict__, **over})
    if args.dump_config:
        _write(io.dumps(config_to_dict(cfg)), args.dump_config)
        return EXIT_OK

    def progress(k, n, row):
        if args.verbose:
            print(f"[{k}/{n}] {row['method']} seed={row['seed']} {row['status']}", file=sys.stderr)

    rows = run_experiment(cfg, workers=args.workers, progress=progress)
    _write(rows_to_csv(rows), args.out)
    failed = sum(r["status"] != "ok" for r in rows)
    if failed:
        print(f"{failed} of {len(rows)} runs failed", file=sys.stderr)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        text = Path(args.csv).read_text()
    except OSError as e:
        raise InputError(str(e)) from e
    rows = read_rows(text)
    summary = aggregate(rows)
    _write(rows_to_csv(summary, summary_columns()), args.out)
    if args.plot_dir:
        d = Path(args.plot_dir)
        d.mkdir(parents=True, exist_ok=True)
        (d / "relative.csv").write_text(rows_to_csv(plot_rows(summary), PLOT_COLUMNS))
        trade = prefilter_tradeoff(summary)
        if trade:
            (d / "prefilter.csv").write_text(rows_to_csv(trade, TRADEOFF_COLUMNS))
    return EXIT_OK


def make_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="rmfs-poa", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="cmd", required=True, parser_class=_Parser)

    g = sub.add_parser("gen", help="generate an instance JSON")
    g.add_argument("--orders", type=_positive_int, required=True)
    g.add_argument("--skus", type=_positive_int, required=True)
    g.add_argument("--pods", type=_positive_int, required=True)
    g.add_argument("--alpha", type=_positive_int, required=True, help="SKUs per pod")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--length-p", type=float, default=0.4)
    g.add_argument("--popularity-p", type=float, default=None)
    g.add_argument("--out", default="-")
    g.add_argument("--layout-out", help="also write the layout used")
    _add_layout_flags(g)
    g.set_defaults(func=cmd_gen)

    s = sub.add_parser("solve", help="solve one period for a warehouse state")
    s.add_argument("state", nargs="?")
    s.add_argument("--fixture", choices=sorted(FIXTURES))
    s.add_argument("--variant", default="integrated",
                   choices=list(VARIANTS) + list(VARIANT_ALIASES))
    s.add_argument("--packing", type=int, default=None, help="packing capacity C")
    s.add_argument("--node-limit", type=_positive_int, default=100_000)
    s.add_argument("--time-limit", type=float, default=None)
    s.add_argument("--oracle", action="store_true", help="cross-check with brute force")
    s.add_argument("--out", default="-")
    s.set_defaults(func=cmd_solve)

    m = sub.add_parser("simulate", help="simulate one instance under one policy")
    m.add_argument("instance")
    m.add_argument("--policy", choices=POLICIES, default="integrated")
    m.add_argument("--seed", type=int, default=0)
    m.add_argument("--prefilter", type=_positive_int, default=None)
    m.add_argument("--tie-break", choices=TIE_BREAKS, default="distance")
    m.add_argument("--node-limit", type=_positive_int, default=20_000)
    m.add_argument("--trace", help="write a tab-separated event log here")
    m.add_argument("--no-wall-time", action="store_true")
    m.add_argument("--out", default="-")
    _add_layout_flags(m)
    m.set_defaults(func=cmd_simulate)

    e = sub.add_parser("experiment", help="run methods x instances x repetitions")
    e.add_argument("config", nargs="?", help="experiment JSON (default: desk-scale set)")
    e.add_argument("--desk-instances", type=_positive_int, default=10)
    e.add_argument("--repetitions", type=_positive_int)
    e.add_argument("--seed-base", type=int)
    e.add_argument("--methods", help="comma separated subset of " + ",".join(POLICIES))
    e.add_argument("--prefilter", type=_prefilter_list, help="sweep, e.g. all,10,20,50")
    e.add_argument("--workers", type=_positive_int, default=None,
                   help="worker processes (default from RMFS_WORKERS, else 1)")
    e.add_argument("--no-wall-time", action="store_true", help="blank the solver time columns")
    e.add_argument("--dump-config", help="write the effective config JSON and exit")
    e.add_argument("--out", default="-")
    e.add_argument("-v", "--verbose", action="store_true")
    e.set_defaults(func=cmd_experiment)

    r = sub.add_parser("report", help="aggregate an experiment CSV")
    r.add_argument("csv")
    r.add_argument("--out", default="-")
    r.add_argument("--plot-dir", help="write plot-data CSVs here")
    r.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InputError, ValueError, SimError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
