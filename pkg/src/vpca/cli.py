"""Command-line entry point: ``vpca solve | sweep | gen``."""

from __future__ import annotations

import argparse
import csv
import io
import os
import random
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from .allocation import AllocationInvariantError, gca, mca
from .exact import FLOW_LIMIT, NODE_LIMIT, LimitExceeded, exact_vpca
from .model import InstanceError, format_number, generate_random, load_instance, serialize_instance, validate
from .netflow import R3Oracle, build_network
from .placement import PlacementConfig, place, vol_place

EXIT_OK, EXIT_INPUT, EXIT_LIMIT, EXIT_INVARIANT = 0, 2, 3, 4
ALGOS = ("rp-mca", "rp-gca", "vol-mca", "exact")
CSV_FIELDS = (
    "instance", "algo", "axis", "axis_value", "rep", "seed", "nodes_selected",
    "budget_used", "total_rate", "processed_rate", "percent", "elapsed_ms",
)


class UsageError(Exception):
    pass


def fmt_rate(x: float) -> str:
    """Up to 6 decimals, trailing zeros dropped but one kept after the point."""
    s = f"{x:.6f}".rstrip("0")
    return s + "0" if s.endswith(".") else s


def run_algo(instance, algo: str, config: PlacementConfig, node_limit=NODE_LIMIT, flow_limit=FLOW_LIMIT):
    """Run one pipeline; returns (solution, elapsed seconds)."""
    t0 = time.perf_counter()
    if algo == "exact":
        sol = exact_vpca(instance, node_limit, flow_limit)
    elif algo == "vol-mca":
        sol = mca(instance, vol_place(instance, config).selected)
    else:
        placement = place(instance, config, R3Oracle(instance))
        sol = (mca if algo == "rp-mca" else gca)(instance, placement.selected)
    return sol, time.perf_counter() - t0


def _percent(processed: float, total: float) -> float:
    return 100.0 * processed / total if total > 0 else 0.0


def parse_algos(text: str) -> list[str]:
    algos = [a.strip() for a in text.split(",") if a.strip()]
    bad = [a for a in algos if a not in ALGOS]
    if bad or not algos:
        raise UsageError(f"unknown algorithm(s) {bad or text!r}; choose from {', '.join(ALGOS)}")
    return algos


def worker_count() -> int:
    raw = os.environ.get("VPCA_THREADS", "0").strip() or "0"
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"VPCA_THREADS must be a non-negative integer, got {raw!r}") from None
    if n < 0:
        raise UsageError(f"VPCA_THREADS must be a non-negative integer, got {raw!r}")
    return n or (os.cpu_count() or 1)


def _config(args) -> PlacementConfig:
    try:
        return PlacementConfig(
            mode=args.placement, eg_size_limit=args.eg_size_limit,
            tie_break=args.tie_break, seed=args.tie_seed,
        )
    except ValueError as exc:
        raise UsageError(str(exc)) from None


def _prepare(args):
    instance = load_instance(args.instance)
    if args.uniform_cost is not None:
        instance = instance.with_uniform_cost(args.uniform_cost)
    if args.budget is not None:
        instance = instance.with_budget(args.budget)
    for warning in validate(instance):
        print(f"warning: {warning}", file=sys.stderr)
    return instance


# --- solve ---------------------------------------------------------------------

def cmd_solve(args) -> int:
    instance = _prepare(args)
    config = _config(args)
    algos = parse_algos(args.algo)
    if args.dot:
        Path(args.dot).write_text(build_network(instance).to_dot())
    total = instance.total_rate
    out = sys.stdout
    print(f"{'algo':<8} {'budget_used':>11} {'total':>12} {'processed':>12} {'percent':>7} {'ms':>10}  nodes", file=out)
    for algo in algos:
        sol, elapsed = run_algo(instance, algo, config, args.exact_node_limit, args.exact_flow_limit)
        names = ",".join(instance.nodes[v].name for v in sorted(sol.placement.selected))
        print(
            f"{algo:<8} {fmt_rate(sol.placement.total_cost):>11} {fmt_rate(total):>12} "
            f"{fmt_rate(sol.objective):>12} {_percent(sol.objective, total):>7.2f} "
            f"{elapsed * 1000:>10.3f}  {names or '-'}",
            file=out,
        )
    return EXIT_OK


# --- sweep ---------------------------------------------------------------------

def sweep_values(start: float, stop: float, step: float) -> list[float]:
    if step <= 0:
        raise UsageError("--step must be positive")
    if stop < start:
        raise UsageError("--stop must not be below --start")
    count = int((stop - start) / step + 1e-9) + 1
    return [round(start + i * step, 9) for i in range(count)]


def _sweep_point(task):
    """Every algorithm on one (axis value, repetition); returns CSV rows and skip notes."""
    instance, name, axis, value, rep, seed, algos, config, limits, timing = task
    rows, notes = [], []
    total = instance.total_rate
    for algo in algos:
        try:
            sol, elapsed = run_algo(instance, algo, config, *limits)
        except LimitExceeded as exc:
            notes.append(f"note: exact skipped at {axis}={format_number(value)} rep {rep}: {exc}")
            continue
        rows.append((value, algos.index(algo), rep, {
            "instance": name,
            "algo": algo,
            "axis": axis,
            "axis_value": format_number(value),
            "rep": rep,
            "seed": seed,
            "nodes_selected": ";".join(instance.nodes[v].name for v in sorted(sol.placement.selected)),
            "budget_used": fmt_rate(sol.placement.total_cost),
            "total_rate": fmt_rate(total),
            "processed_rate": fmt_rate(sol.objective),
            "percent": f"{_percent(sol.objective, total):.2f}",
            "elapsed_ms": f"{elapsed * 1000:.3f}" if timing else "0",
        }))
    return rows, notes


def cmd_sweep(args) -> int:
    base = _prepare(args)
    config = _config(args)
    algos = parse_algos(args.algo)
    values = sweep_values(args.start, args.stop, args.step)
    if args.flows is not None and not 0 <= args.flows <= base.num_flows:
        raise UsageError(f"--flows must be between 0 and {base.num_flows}")
    name = Path(args.instance).stem
    limits = (args.exact_node_limit, args.exact_flow_limit)

    tasks = []
    for rep in range(args.reps):
        seed = args.seed + rep
        inst = base
        if args.flows is not None:
            picked = sorted(random.Random(seed).sample(range(base.num_flows), args.flows))
            inst = base.with_flows(picked)
        for value in values:
            point = inst.with_budget(value) if args.axis == "budget" else inst.with_uniform_capacity(value)
            tasks.append((point, name, args.axis, value, rep, seed, algos, config, limits, not args.no_timing))

    workers = min(worker_count(), len(tasks))
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_point, tasks))
    else:
        results = [_sweep_point(t) for t in tasks]

    rows = sorted((r for rs, _ in results for r in rs), key=lambda r: r[:3])
    for _, notes in results:
        for note in notes:
            print(note, file=sys.stderr)
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=CSV_FIELDS, lineterminator="\n")
    writer.writeheader()
    for *_, row in rows:
        writer.writerow(row)
    if args.out:
        Path(args.out).write_text(buf.getvalue())
    else:
        sys.stdout.write(buf.getvalue())
    return EXIT_OK


# --- gen -----------------------------------------------------------------------

def cmd_gen(args) -> int:
    instance = generate_random(
        args.nodes, args.flows, args.max_path_len,
        (args.rate_min, args.rate_max), (args.capacity_min, args.capacity_max),
        (args.cost_min, args.cost_max), args.budget_fraction, args.seed,
    )
    text = serialize_instance(instance)
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# --- argument parsing --------------------------------------------------------------

def _instance_args(p):
    p.add_argument("--instance", required=True, help="instance file")
    p.add_argument("--algo", default="rp-mca", help=f"comma list of {', '.join(ALGOS)}")
    p.add_argument("--budget", type=float, help="override the file's budget")
    p.add_argument("--uniform-cost", type=float, help="set every node's cost to this value")
    p.add_argument("--placement", default="auto", choices=("auto", "SG", "EG"),
                   help="placement for rp-* pipelines")
    p.add_argument("--eg-size-limit", type=int, default=12)
    p.add_argument("--tie-break", default="lowest-id", choices=("lowest-id", "random"))
    p.add_argument("--tie-seed", type=int, default=0)
    p.add_argument("--exact-node-limit", type=int, default=NODE_LIMIT)
    p.add_argument("--exact-flow-limit", type=int, default=FLOW_LIMIT)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="vpca", description="VNF-node placement and capacity allocation")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("solve", help="solve one instance")
    _instance_args(p)
    p.add_argument("--dot", help="write the auxiliary flow network to this DOT file")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("sweep", help="CSV sweep over budget or capacity")
    _instance_args(p)
    p.add_argument("--axis", choices=("budget", "capacity"), default="budget")
    p.add_argument("--start", type=float, required=True)
    p.add_argument("--stop", type=float, required=True)
    p.add_argument("--step", type=float, required=True)
    p.add_argument("--reps", type=int, default=1)
    p.add_argument("--seed", type=int, default=0, help="base seed; repetition r uses seed + r")
    p.add_argument("--flows", type=int, help="subsample this many flows per repetition")
    p.add_argument("--out", help="CSV path (default stdout)")
    p.add_argument("--no-timing", action="store_true", help="write 0 for elapsed_ms (byte-stable output)")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("gen", help="write a random instance")
    p.add_argument("--nodes", type=int, required=True)
    p.add_argument("--flows", type=int, required=True)
    p.add_argument("--max-path-len", type=int, default=5)
    p.add_argument("--rate-min", type=float, default=1.0)
    p.add_argument("--rate-max", type=float, default=100.0)
    p.add_argument("--capacity-min", type=float, default=100.0)
    p.add_argument("--capacity-max", type=float, default=1000.0)
    p.add_argument("--cost-min", type=float, default=100.0)
    p.add_argument("--cost-max", type=float, default=100.0)
    p.add_argument("--budget-fraction", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help="output path (default stdout)")
    p.set_defaults(func=cmd_gen)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (InstanceError, UsageError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except LimitExceeded as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_LIMIT
    except AllocationInvariantError as exc:
        print(f"internal error: {exc}", file=sys.stderr)
        return EXIT_INVARIANT


if __name__ == "__main__":
    sys.exit(main())
