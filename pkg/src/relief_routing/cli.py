"""Command-line front end: gen, solve, simulate, experiment, verify, aggregate.

The experiment runner expands a dataset over its speed and fleet grids,
fans instances out over a worker pool (static partition by index modulo the
worker count), and collates records into a canonical order before writing,
so the emitted CSV bytes do not depend on the worker count.
"""

from __future__ import annotations

import argparse
import json
import multiprocessing
import os
import sys
from pathlib import Path

from .generators import (DATASETS, GRAPH_CLASSES, GeneratorConfig,
                         build_dataset, dataset_manifest, generate_graph,
                         mix_seed, sample_damage)
from .graphs import RdpInstance, load_instance, save_instance
from .harness import (SummaryRow, aggregate, evaluate, records_from_csv,
                      records_to_csv, summaries_to_csv, verify_bounds)
from .policies import POLICIES, simulate
from .solver import rdp_star_opt, solver_context

WORKER_ENV = "RELIEF_ROUTING_WORKERS"
DEFAULT_ROOT_SEED = 20250810


def _parse_policies(raw: str) -> list[str]:
    names = [p.strip() for p in raw.split(",") if p.strip()]
    for name in names:
        if name not in POLICIES:
            raise SystemExit(f"unknown policy {name!r}; known: {', '.join(POLICIES)}")
    return names


def _parse_fleets(raw: str) -> list[tuple[int, int]]:
    fleets = []
    for chunk in raw.split(";"):
        chunk = chunk.strip()
        if not chunk:
            continue
        trucks, drones = chunk.split(",")
        fleets.append((int(trucks), int(drones)))
    if not fleets:
        raise SystemExit("empty fleet list")
    return fleets


def _parse_alphas(raw: str) -> list[float]:
    return [float(a) for a in raw.split(",") if a.strip()]


def _cmd_gen(args) -> int:
    config = GeneratorConfig(graph_class=args.graph_class, n=args.n,
                             seed=args.seed, damage_prob=args.delta,
                             edge_target=args.edge_target)
    graph = generate_graph(config)
    damage = sample_damage(graph, args.delta, mix_seed(args.seed, int(args.delta * 1000)))
    instance_id = f"{args.graph_class}-n{args.n}-s{args.seed}"
    instance = RdpInstance.build(
        graph, trucks=args.trucks, drones=args.drones, alpha=args.alpha,
        damaged=damage,
        meta={"id": instance_id, "class": args.graph_class, "n": args.n,
              "seed": args.seed, "delta": args.delta})
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    path = out / f"{instance_id}.json"
    save_instance(instance, path)
    print(path)
    return 0


def _cmd_solve(args) -> int:
    instance = load_instance(args.instance)
    if args.mode == "rdp-star":
        solution = rdp_star_opt(instance)
    else:
        solution = solver_context(instance.closure).multi_tsp(
            instance.targets, instance.trucks, instance.drones, instance.alpha)
    payload = {
        "mode": args.mode,
        "makespan": solution.makespan,
        "truck_tours": [list(t.nodes) for t in solution.truck_tours],
        "drone_tours": [list(t.nodes) for t in solution.drone_tours],
    }
    text = json.dumps(payload, indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _cmd_simulate(args) -> int:
    instance = load_instance(args.instance)
    outcome = simulate(instance, args.policy)
    text = json.dumps(outcome.to_dict(), indent=2)
    if args.out:
        Path(args.out).write_text(text + "\n", encoding="utf-8")
    else:
        print(text)
    return 0


def _expand_tasks(items, alphas, fleets, policies):
    tasks = []
    for item in items:
        use_alphas = alphas if alphas is not None else item.alphas
        use_fleets = fleets if fleets is not None else item.fleets
        for alpha in use_alphas:
            for trucks, drones in use_fleets:
                tasks.append((item.instance, alpha, trucks, drones, tuple(policies)))
    return tasks


def _run_task(task):
    instance, alpha, trucks, drones, policies = task
    variant = instance.with_fleet(trucks, drones, alpha)
    return evaluate(variant, policies)


def _run_shard(shard):
    out = []
    for task in shard:
        out.extend(_run_task(task))
    return out


def run_experiment(items, policies, out_dir: Path, alphas=None, fleets=None,
                   workers: int = 1, strict: bool = False,
                   manifest: dict | None = None) -> int:
    tasks = _expand_tasks(items, alphas, fleets, policies)
    if workers > 1:
        shards = [tasks[i::workers] for i in range(workers)]
        with multiprocessing.Pool(workers) as pool:
            shard_results = pool.map(_run_shard, shards)
        records = [r for shard in shard_results for r in shard]
    else:
        records = _run_shard(tasks)
    records.sort(key=lambda r: (r.instance_id, r.alpha, r.trucks, r.drones, r.policy))

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "records.csv").write_text(records_to_csv(records), encoding="utf-8")
    if manifest is not None:
        (out_dir / "manifest.json").write_text(
            json.dumps(manifest, indent=2) + "\n", encoding="utf-8")

    for policy in policies:
        subset = [r for r in records if r.policy == policy]
        if not subset:
            continue
        by_alpha = ("alpha", "trucks", "drones")
        rows = aggregate(subset, by_alpha, "competitive_ratio")
        (out_dir / f"ratio_vs_alpha_{policy}.csv").write_text(
            summaries_to_csv(rows, by_alpha), encoding="utf-8")
        rows = aggregate(subset, by_alpha, "drone_impact_ratio")
        (out_dir / f"risk_vs_alpha_{policy}.csv").write_text(
            summaries_to_csv(rows, by_alpha), encoding="utf-8")
        by_fleet = ("trucks", "drones", "alpha")
        rows = aggregate(subset, by_fleet, "competitive_ratio")
        (out_dir / f"ratio_vs_drone_trucks_{policy}.csv").write_text(
            summaries_to_csv(rows, by_fleet), encoding="utf-8")

    report = verify_bounds(records)
    if report.violations:
        for violation in report.violations:
            print(f"BOUND VIOLATION: {violation.describe()}", file=sys.stderr)
        if strict:
            return 1
    print(f"{len(records)} records -> {out_dir} "
          f"({report.checked} checked, {len(report.violations)} violations)")
    return 0


def _cmd_experiment(args) -> int:
    items = build_dataset(args.dataset, args.root_seed)
    manifest = dataset_manifest(args.dataset, args.root_seed, items)
    workers = args.workers or int(os.environ.get(WORKER_ENV, "1"))
    alphas = _parse_alphas(args.alphas) if args.alphas else None
    fleets = _parse_fleets(args.fleets) if args.fleets else None
    return run_experiment(
        items, _parse_policies(args.policies), Path(args.out),
        alphas=alphas, fleets=fleets, workers=max(1, workers),
        strict=args.strict, manifest=manifest)


def _cmd_verify(args) -> int:
    records = records_from_csv(Path(args.infile).read_text(encoding="utf-8"))
    report = verify_bounds(records)
    for violation in report.violations:
        print(f"VIOLATION: {violation.describe()}")
    print(f"checked {report.checked} records: {len(report.violations)} violations, "
          f"{len(report.tight)} tight")
    if report.violations and args.strict:
        return 1
    return 0


def _cmd_aggregate(args) -> int:
    records = records_from_csv(Path(args.infile).read_text(encoding="utf-8"))
    group_by = tuple(col.strip() for col in args.group_by.split(",") if col.strip())
    rows = aggregate(records, group_by, args.metric)
    text = summaries_to_csv(rows, group_by)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        print(text, end="")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="relief-routing",
        description="Exact solvers and online-policy experiments for "
                    "truck-and-drone relief distribution.")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate one benchmark instance")
    p.add_argument("--class", dest="graph_class", required=True, choices=GRAPH_CLASSES)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--delta", type=float, default=0.3)
    p.add_argument("--alpha", type=float, default=1.0)
    p.add_argument("--trucks", type=int, default=1)
    p.add_argument("--drones", type=int, default=1)
    p.add_argument("--edge-target", type=int, default=None)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_gen)

    p = sub.add_parser("solve", help="exact offline solution for an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--mode", choices=("rdp-star", "multi-tsp"), default="rdp-star")
    p.add_argument("--out")
    p.set_defaults(func=_cmd_solve)

    p = sub.add_parser("simulate", help="run one online policy on an instance file")
    p.add_argument("--instance", required=True)
    p.add_argument("--policy", required=True, choices=POLICIES)
    p.add_argument("--out")
    p.set_defaults(func=_cmd_simulate)

    p = sub.add_parser("experiment", help="run a policy matrix over a dataset")
    p.add_argument("--dataset", required=True, choices=DATASETS)
    p.add_argument("--root-seed", type=int, default=DEFAULT_ROOT_SEED)
    p.add_argument("--policies", default="optimistic,regretless")
    p.add_argument("--alphas", help="override the dataset speed grid, e.g. 0.5,1,2")
    p.add_argument("--fleets", help="override the fleet grid, e.g. 1,1;1,2;2,1")
    p.add_argument("--workers", type=int, default=None,
                   help=f"worker processes (default: ${WORKER_ENV} or 1)")
    p.add_argument("--strict", action="store_true",
                   help="exit nonzero on any bound violation")
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_experiment)

    p = sub.add_parser("verify", help="check theoretical bounds on a records CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--strict", action="store_true")
    p.set_defaults(func=_cmd_verify)

    p = sub.add_parser("aggregate", help="box-plot summaries from a records CSV")
    p.add_argument("--in", dest="infile", required=True)
    p.add_argument("--group-by", default="alpha,trucks,drones")
    p.add_argument("--metric", default="competitive_ratio",
                   choices=("competitive_ratio", "drone_impact_ratio", "makespan"))
    p.add_argument("--out")
    p.set_defaults(func=_cmd_aggregate)
    return parser


def run_cli(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


def main() -> None:
    sys.exit(run_cli())


if __name__ == "__main__":
    main()
