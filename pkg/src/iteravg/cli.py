"""Command-line interface: ``iteravg {simulate,sweep,verify,reach,dynamics}``.

Exit codes: 0 success, 1 a check or internal assertion failed, 2 bad usage.
Failures print a one-line JSON diagnostic on stderr.  Floats are written with
17 significant digits and exact rationals as ``p/q`` strings; identical flags
and seed give byte-identical output.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import analysis, strategies
from . import averaging_dynamics as dyn
from . import majorization as maj
from .tank_core import Color, TankConfig, run_strategy, transferred_to_blue
from .verify import SUITES, run_suite


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def fmt(value) -> str:
    if isinstance(value, Fraction):
        return str(value)
    return f"{float(value):.17g}"


def _jsonable(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, float):
        return float(fmt(value))
    if isinstance(value, dict):
        return {k: _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.generic):
        return _jsonable(value.item())
    return value


def dump_json(obj) -> str:
    return json.dumps(_jsonable(obj), sort_keys=True)


def _int_list(text: str) -> list[int]:
    try:
        return [int(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of integers, got {text!r}")


def _float_list(text: str) -> list[float]:
    try:
        return [float(t) for t in text.split(",") if t.strip()]
    except ValueError:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}")


def _emit(text: str, path: str | None, out) -> None:
    if path:
        Path(path).write_text(text)
    else:
        out.write(text)


# --------------------------------------------------------------------------
# simulate


def read_levels_csv(path: str, exact: bool) -> TankConfig:
    """Read a ``tank,color,level`` CSV (the format ``simulate`` writes)."""
    rows = list(csv.DictReader(Path(path).read_text().splitlines()))
    rows.sort(key=lambda r: int(r["tank"]))
    if [int(r["tank"]) for r in rows] != list(range(len(rows))):
        raise UsageError("tank column must number the tanks 0..N-1")
    levels = [Fraction(r["level"]) if exact else float(Fraction(r["level"])) for r in rows]
    return TankConfig(levels, [Color(r["color"].strip().lower()) for r in rows])


def levels_csv(config: TankConfig) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["tank", "color", "level"])
    for a, (level, color) in enumerate(zip(config.levels, config.colors)):
        writer.writerow([a, color.value, fmt(level)])
    return buf.getvalue()


def _split_layout(config: TankConfig) -> int:
    n = len(config.reds)
    if config.reds != tuple(range(n)) or config.blues != tuple(range(n, 2 * n)):
        raise UsageError("this strategy needs n red tanks followed by n blue tanks")
    return n


def cmd_simulate(args, out) -> int:
    if args.initial == "full-empty":
        if args.n is None:
            raise UsageError("--n is required with a full/empty start")
        if args.n < 0:
            raise UsageError("--n must be nonnegative")
        config = TankConfig.full_empty(args.n, exact=args.exact)
    else:
        if args.strategy == "heat":
            raise UsageError("the heat exchanger model only runs from the full/empty start")
        config = read_levels_csv(args.initial, args.exact)
    if args.trace and args.strategy == "heat":
        raise UsageError("--trace is not available for the heat exchanger model")

    k = args.k
    strategy = None
    trace = None
    n = len(config.reds)
    final_averages = not args.pre_average
    if len(config) == 0:
        final = config
    elif args.strategy == "naive":
        n = _split_layout(config)
        strategy = strategies.naive_strategy(n, final_averages)
    elif args.strategy == "window":
        n = _split_layout(config)
        k = strategies.default_window_width(n) if k is None else k
        if not 1 <= k <= n:
            raise UsageError(f"--k must be in 1..{n}")
        strategy = strategies.moving_window_strategy(n, k, final_averages)
    elif args.strategy == "greedy":
        strategy = strategies.greedy_optimal_strategy(config)
    else:
        if k is not None and not 1 <= k <= n:
            raise UsageError(f"--k must be in 1..{n}")
        final = strategies.heat_exchanger_simulate(n, k, exact=args.exact, mix_outlets=final_averages)
    if strategy is not None:
        if args.trace:
            final, trace = run_strategy(config, strategy, trace=True)
        else:
            final = run_strategy(config, strategy)

    zero = Fraction(0) if args.exact else 0.0
    if args.exact and sum(final.levels, zero) != sum(config.levels, zero):
        raise AssertionError("total water not conserved")
    reds = [final.levels[a] for a in final.reds]
    summary = {
        "strategy": args.strategy,
        "n_tanks": len(config),
        "n_red": len(config.reds),
        "k": k,
        "exact": args.exact,
        "final_averages": final_averages,
        "steps": len(strategy) if strategy is not None else None,
        "total_transferred": transferred_to_blue(config, final) if len(config) else zero,
        "residual_per_red": (sum(reds, zero) / len(reds)) if reds else None,
        "max_red": max(reds) if reds else None,
    }
    if trace is not None:
        summary["trace"] = [[fmt(v) for v in snap] for snap in trace]

    table = levels_csv(final)
    if args.out:
        Path(args.out).write_text(table)
        summary_path = args.summary or str(Path(args.out).with_suffix(".json"))
        Path(summary_path).write_text(dump_json(summary) + "\n")
        out.write(dump_json(summary) + "\n")
    else:
        out.write(table)
        if args.summary:
            Path(args.summary).write_text(dump_json(summary) + "\n")
        else:
            out.write("\n" + dump_json(summary) + "\n")
    return 0


# --------------------------------------------------------------------------
# sweep


def cmd_sweep(args, out) -> int:
    ns = _int_list(args.ns)
    if not ns:
        raise UsageError("--ns must list at least one n")
    if any(n < 1 for n in ns):
        raise UsageError("every n must be positive")
    records = analysis.residual_sweep(ns, args.strategy)
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["n", "strategy", "residual_per_red"])
    for rec in records:
        writer.writerow([rec.n, rec.strategy_id, fmt(rec.residual_per_red)])
    text = buf.getvalue()
    if args.fit:
        if len(set(ns)) < 3:
            raise UsageError("--fit needs at least three distinct n")
        fit = analysis.conjecture_fit(records)
        text += dump_json({"a": fit.a, "b": fit.b, "rms_error": fit.rms_error, "conjectured_a": 1 / np.sqrt(np.pi)}) + "\n"
    _emit(text, args.out, out)
    return 0


# --------------------------------------------------------------------------
# verify


def cmd_verify(args, out) -> int:
    report = run_suite(args.suite, args.seed)
    out.write(dump_json(report) + "\n")
    return 0 if report["passed"] else 1


# --------------------------------------------------------------------------
# reach


def cmd_reach(args, out) -> int:
    x = _float_list(args.x)
    if not x:
        raise UsageError("--x must list at least one coordinate")
    if args.depth < 0 or args.samples < 0:
        raise UsageError("--depth and --samples must be nonnegative")
    if args.hull and len(x) not in (3, 4):
        raise UsageError("--hull needs n = 3 or n = 4")
    rng = np.random.default_rng(args.seed)
    cloud = maj.sample_reachable(x, args.depth, args.samples, rng, args.lam_mode)

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([f"x{i + 1}" for i in range(len(x))])
    for row in cloud.points:
        writer.writerow([fmt(v) for v in row])
    csv_text = buf.getvalue()

    if not args.hull:
        _emit(csv_text, args.out, out)
        return 0
    hull = maj.hull_in_sum_plane(cloud.points)
    hull.label = maj.EVIDENCE_LABEL
    closure = maj.hull_closure_test(x, hull, args.closure_trials, rng)
    report = dump_json({"hull": hull.to_dict(), "closure": closure.to_dict(), "points": len(cloud)}) + "\n"
    if args.out:
        Path(args.out).write_text(csv_text)
    elif not args.hull_out:
        out.write(csv_text + "\n")
    _emit(report, args.hull_out, out)
    return 0


# --------------------------------------------------------------------------
# dynamics


def cmd_dynamics(args, out) -> int:
    if args.eps <= 0:
        raise UsageError("--eps must be positive")
    rng = np.random.default_rng(args.seed)
    if args.f is not None:
        text = Path(args.f).read_text() if Path(args.f).is_file() else args.f
        values = np.array(_float_list(text.replace("\n", ",")))
        if args.cells is not None and args.cells != len(values):
            raise UsageError("--cells does not match the length of --f")
    else:
        if args.cells is None or args.cells < 1:
            raise UsageError("give --cells (random f) or --f")
        values = rng.random(args.cells)
    cells = len(values)
    if args.perm is not None:
        images = _int_list(args.perm)
        try:
            perm = dyn.Permutation(images)
        except ValueError as exc:
            raise UsageError(str(exc))
        if len(perm) != cells:
            raise UsageError("--perm length does not match the number of cells")
    elif args.f is not None:
        perm = dyn.Permutation.identity(cells)
    else:
        perm = dyn.Permutation(rng.permutation(cells))

    f = dyn.FiniteFunction(values)
    plan, result = dyn.approximate_permutation(f, perm, args.eps)
    error = dyn.sup_error(result, f.compose(perm))
    report = {
        "cells": cells,
        "eps": args.eps,
        "m": plan.m,
        "plan_length": len(plan),
        "sup_error": error,
        "passed": error < args.eps,
        "f": values.tolist(),
        "perm": list(perm.images),
        "result": result.values.tolist(),
    }
    if args.plan_out:
        Path(args.plan_out).write_text(plan.to_json() + "\n")
    out.write(dump_json(report) + "\n")
    return 0 if error < args.eps else 1


# --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    seeded = _Parser(add_help=False)
    seeded.add_argument("--seed", type=int, default=0, help="seed for every random draw (default 0)")

    parser = _Parser(prog="iteravg", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("simulate", parents=[seeded], help="run a water tank strategy")
    p.add_argument("--strategy", choices=["naive", "window", "greedy", "heat"], required=True)
    p.add_argument("--n", type=int, help="number of red (and of blue) tanks")
    p.add_argument("--k", type=int, help="window width, or tube capacity for heat (default unlimited)")
    p.add_argument("--exact", action="store_true", help="rational arithmetic")
    p.add_argument("--initial", default="full-empty", help='"full-empty" or a tank,color,level CSV')
    p.add_argument("--pre-average", action="store_true", help="skip the closing per-color averages")
    p.add_argument("--out", help="write the levels CSV here (summary JSON next to it)")
    p.add_argument("--summary", help="write the summary JSON here")
    p.add_argument("--trace", action="store_true", help="include the levels after every step in the summary")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("sweep", parents=[seeded], help="residual per red tank over several n")
    p.add_argument("--ns", required=True, help="comma-separated list of n")
    p.add_argument("--strategy", choices=["naive", "window"], default="naive")
    p.add_argument("--fit", action="store_true", help="append the a/sqrt(n) + b/n^1.5 fit as JSON")
    p.add_argument("--out")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("verify", parents=[seeded], help="run a property suite")
    p.add_argument("--suite", choices=[*SUITES, "all"], default="all")
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("reach", parents=[seeded], help="sample Robin Hood reachable sets")
    p.add_argument("--x", required=True, help="comma-separated start vector")
    p.add_argument("--depth", type=int, default=10)
    p.add_argument("--samples", type=int, default=1000)
    p.add_argument("--lam-mode", choices=list(maj.LAM_MODES), default="uniform")
    p.add_argument("--hull", action="store_true", help="hull and closure report (n = 3 or 4)")
    p.add_argument("--closure-trials", type=int, default=10000)
    p.add_argument("--out", help="write the point cloud CSV here")
    p.add_argument("--hull-out", help="write the hull JSON here")
    p.set_defaults(func=cmd_reach)

    p = sub.add_parser("dynamics", parents=[seeded], help="approximate f o perm by partition averages")
    p.add_argument("--cells", type=int)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--f", help="cell values, comma-separated or a file of them")
    p.add_argument("--perm", help="comma-separated images perm[0], perm[1], ...")
    p.add_argument("--plan-out", help="export the plan as JSON")
    p.set_defaults(func=cmd_dynamics)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    try:
        args = build_parser().parse_args(argv)
        return args.func(args, out)
    except UsageError as exc:
        err.write(json.dumps({"error": "usage", "message": str(exc)}) + "\n")
        return 2
    except (ValueError, AssertionError) as exc:
        err.write(json.dumps({"error": type(exc).__name__, "message": str(exc)}) + "\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
