#!/usr/bin/env python3
"""
Execution-grouped SQL candidate selection

Entry point for the selection engine.
Executes candidate SQL, groups it by result, ranks the groups and reports
execution accuracy.

Usage:
    python -m src.main select --db toy.sqlite --question "..." --pool pool.json
    python -m src.main evaluate --dataset dev.json --db-root dbs/ --out report.json
    python -m src.main ablate --dataset dev.json --db-root dbs/ --grid grid.yaml
    python -m src.main reward-export --dataset dev.json --db-root dbs/ --pools pools.json
    python -m src.main judge --db toy.sqlite --question "..." --pool pool.json

Exit codes: 0 success, 2 configuration or dataset error, 3 backend failure.
"""

import argparse
import asyncio
import json
import logging
import sys
from pathlib import Path
from typing import Optional

from .agents.factory import Backends, build_backends
from .config.loader import RunConfig, load_run_config
from .config.settings import settings
from .core.errors import BackendError, ConfigurationError, DatasetError
from .core.models import SelectionConfig, Task
from .evaluation.ablation import ablate, load_grid
from .evaluation.dataset import load_dataset, load_db_map, load_pool, load_pools
from .evaluation.harness import evaluate, initial_pool
from .execution.runner import SqlExecutor
from .output.formatter import OutputFormatter, TraceWriter
from .reward.consistency import score_pairs
from .reward.pairs import build_pairs, prepare_pools
from .selection.pipeline import select
from .selection.resample import judge_order

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_BACKEND = 3

# CLI flag -> SelectionConfig field
SELECTION_FLAGS = {
    "tau": "tau",
    "n": "n",
    "m": "m",
    "lambda_c": "lambda_c",
    "order_policy": "order_policy",
    "float_tol": "float_tol",
    "exec_timeout_ms": "exec_timeout_ms",
    "resampling": "resampling",
    "mode": "mode",
    "order_sensitive": "order_sensitive",
    "max_pairs": "max_pairs_per_group_pair",
    "resample_merge": "resample_merge",
    "prune": "prune",
    "pointwise_enabled": "pointwise_enabled",
    "final_tie_to_prime": "final_tie_to_prime",
}


def _add_shared(parser: argparse.ArgumentParser) -> None:
    """Flags every sub-command accepts."""
    run = parser.add_argument_group("run")
    run.add_argument("--config", type=Path, help="Run configuration document (YAML or JSON)")
    run.add_argument("--backend", choices=["stub", "http"], help="Backend kind for every role")
    run.add_argument("--stub-file", type=Path, help="Stub table JSON for stub backends")
    run.add_argument("--cache-dir", type=Path, help=f"Response cache directory (default: {settings.cache_dir})")
    run.add_argument("--no-cache", action="store_true", help="Do not read or write the response cache")
    run.add_argument("--max-parallel", type=int, help=f"Cap on concurrent backend calls (default: {settings.max_parallel})")
    run.add_argument("--seed", type=int, default=0, help="Seed for every stochastic choice (default: 0)")
    run.add_argument("--verbose", "-v", action="store_true", help="Debug logging")

    sel = parser.add_argument_group("selection")
    sel.add_argument("--tau", type=float, help="Decisive-preference threshold")
    sel.add_argument("--n", type=int, help="Initial pool size")
    sel.add_argument("--m", type=int, help="Resample budget")
    sel.add_argument("--lambda-c", type=float, help="Consistency reward weight")
    sel.add_argument("--order-policy", choices=["single", "dual"])
    sel.add_argument("--float-tol", type=float, help="Float comparison tolerance")
    sel.add_argument("--exec-timeout-ms", type=int, help="Per-query execution timeout")
    sel.add_argument("--resampling", choices=["off", "always", "agentic"])
    sel.add_argument("--mode", choices=["r3", "fmv", "pointwise", "pointwise_avg", "listwise"])
    sel.add_argument("--order-sensitive", action="store_const", const=True, help="Compare result rows in order")
    sel.add_argument("--max-pairs", type=int, help="Cap on sampled cross pairs per group pair")
    sel.add_argument("--resample-merge", choices=["replace", "union"])
    sel.add_argument("--no-prune", dest="prune", action="store_const", const=False, help="Keep the first n resampled candidates")
    sel.add_argument(
        "--no-pointwise", dest="pointwise_enabled", action="store_const", const=False, help="Every candidate utility is 1"
    )
    sel.add_argument("--final-tie-to-prime", action="store_const", const=True, help="Keep the top group on a 1/2 tie")


def _add_task_source(parser: argparse.ArgumentParser) -> None:
    src = parser.add_argument_group("task")
    src.add_argument("--db", type=Path, help="SQLite database file")
    src.add_argument("--question", help="Natural-language question")
    src.add_argument("--evidence", default="", help="External knowledge hint")
    src.add_argument("--task-id", default="cli", help="Task id (stub tables key on it)")
    src.add_argument("--task-file", type=Path, help="Dataset file to take the task from (with --task-id)")
    src.add_argument("--db-root", type=Path, help="Database directory for --task-file")
    src.add_argument("--pool", type=Path, help="Candidate pool JSON (list of SQL strings)")


def _add_dataset(parser: argparse.ArgumentParser) -> None:
    data = parser.add_argument_group("dataset")
    data.add_argument("--dataset", type=Path, required=True, help="BIRD-style dataset (JSON or JSONL)")
    data.add_argument("--db-root", type=Path, help="Database directory")
    data.add_argument("--db-map", type=Path, help="db_id -> SQLite path mapping (YAML/JSON)")
    data.add_argument("--format", dest="fmt", choices=["auto", "json", "jsonl"], default="auto")
    data.add_argument("--pools", type=Path, help="Pre-built pools {task_id: [sql, ...]}")
    data.add_argument("--no-progress", action="store_true", help="Hide the progress bar")


def build_parser() -> argparse.ArgumentParser:
    """Build the command line parser."""
    parser = argparse.ArgumentParser(
        prog="groupsql",
        description="Execution-grouped ranking and selection of text-to-SQL candidates",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    p = commands.add_parser("select", help="Select one SQL for one question")
    _add_shared(p)
    _add_task_source(p)
    p.add_argument("--generate", type=int, help="Generate this many candidates instead of --pool")
    p.add_argument("--out", type=Path, help="Write the SelectionTrace JSON here")

    p = commands.add_parser("evaluate", help="Execution accuracy over a dataset")
    _add_shared(p)
    _add_dataset(p)
    p.add_argument("--out", type=Path, help="Report JSON path (default: report.json in the output dir)")
    p.add_argument("--traces", type=Path, help="Stream SelectionTraces to this JSONL file")

    p = commands.add_parser("ablate", help="Evaluate a grid of config variants")
    _add_shared(p)
    _add_dataset(p)
    p.add_argument("--grid", type=Path, required=True, help="Grid document (YAML or JSON)")
    p.add_argument("--out", type=Path, help="Sweep CSV path (default: sweep.csv in the output dir)")

    p = commands.add_parser("reward-export", help="Export correct/incorrect pairs for ranker training")
    _add_shared(p)
    _add_dataset(p)
    p.add_argument("--policy", choices=["random", "hard_top15"], default="hard_top15", help="Negative sampling")
    p.add_argument("--score", action="store_true", help="Also query the pairwise ranker and attach rewards")
    p.add_argument("--out", type=Path, help="Pairs JSONL path (default: pairs.jsonl in the output dir)")

    p = commands.add_parser("judge", help="Ask the judge whether a pool holds a correct SQL")
    _add_shared(p)
    _add_task_source(p)

    return parser


def selection_overrides(args: argparse.Namespace) -> dict:
    return {field: getattr(args, flag) for flag, field in SELECTION_FLAGS.items() if getattr(args, flag, None) is not None}


def resolve_config(args: argparse.Namespace) -> RunConfig:
    return load_run_config(
        path=args.config,
        selection_overrides=selection_overrides(args),
        backend_kind=args.backend,
        stub_file=args.stub_file,
        cache_dir=args.cache_dir,
        max_parallel=args.max_parallel,
    )


def make_backends(config: RunConfig, args: argparse.Namespace, selection: Optional[SelectionConfig] = None) -> Backends:
    if selection is not None:
        config = config.model_copy(update={"selection": selection})
    return build_backends(config, use_cache=not args.no_cache)


def resolve_task(args: argparse.Namespace, parser: argparse.ArgumentParser) -> Task:
    """Task from --task-file/--task-id or from --db/--question."""
    if args.task_file is not None:
        if args.db_root is None:
            parser.error("--task-file needs --db-root")
        tasks = {t.task_id: t for t in load_dataset(args.task_file, args.db_root)}
        if args.task_id not in tasks:
            raise ConfigurationError(f"task {args.task_id!r} not in {args.task_file}")
        return tasks[args.task_id]
    if args.db is None:
        parser.error("--db is required (or --task-file with --task-id)")
    if not args.question:
        parser.error("--question is required with --db")
    if not args.db.is_file():
        raise ConfigurationError(f"database file not found: {args.db}")
    return Task(task_id=args.task_id, question=args.question, evidence=args.evidence, db_ref=args.db)


def output_path(args: argparse.Namespace, default_name: str) -> Path:
    """--out relative to the working directory, else default_name under the output dir."""
    return args.out.resolve() if args.out is not None else Path(default_name)


def load_tasks(args: argparse.Namespace) -> list[Task]:
    db_map = load_db_map(args.db_map) if args.db_map else None
    return load_dataset(args.dataset, args.db_root, fmt=args.fmt, db_map=db_map)


async def cmd_select(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    task = resolve_task(args, parser)
    if args.pool is None and args.generate is None:
        parser.error("select needs --pool or --generate N")
    config = resolve_config(args)
    backends = make_backends(config, args)

    if args.pool is not None:
        pool = initial_pool(load_pool(args.pool))
    else:
        pool = await backends.generator.generate(task, args.generate)

    print(f"🔎 Selecting among {len(pool)} candidates ({config.selection.mode})", file=sys.stderr)
    trace = await select(task, pool, config.selection, backends, seed=args.seed)

    print(f"   {len(trace.groups)} groups, final candidate {trace.final_cand_idx}", file=sys.stderr)
    for flag in trace.flags:
        print(f"   ⚠️  {flag}", file=sys.stderr)
    if args.out is not None:
        path = OutputFormatter(settings.output_dir).save_trace(trace, output_path(args, "trace.json"))
        print(f"📁 Trace saved to: {path}", file=sys.stderr)
    print(trace.chosen_sql)
    return EXIT_OK


async def cmd_evaluate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    tasks = load_tasks(args)
    pools = load_pools(args.pools) if args.pools else None
    config = resolve_config(args)
    backends = make_backends(config, args)
    formatter = OutputFormatter(settings.output_dir)

    print(f"📊 Evaluating {len(tasks)} tasks ({config.selection.mode})", file=sys.stderr)
    writer = TraceWriter(args.traces) if args.traces else None
    try:
        report = await evaluate(
            tasks,
            config.selection,
            backends,
            seed=args.seed,
            pools=pools,
            trace_sink=writer,
            progress=not args.no_progress,
            max_parallel=args.max_parallel,
        )
    finally:
        if writer is not None:
            writer.close()

    path = formatter.save_report(report, output_path(args, "report.json"))
    print(formatter.format_summary(report), file=sys.stderr)
    print(f"📁 Report saved to: {path}", file=sys.stderr)
    print(formatter.format_ex_line(report))
    return EXIT_OK if report.complete else EXIT_BACKEND


async def cmd_ablate(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    tasks = load_tasks(args)
    pools = load_pools(args.pools) if args.pools else None
    grid = load_grid(args.grid)
    config = resolve_config(args)
    formatter = OutputFormatter(settings.output_dir)

    print(f"🧪 Ablating {len(grid.variants)} variants over {len(tasks)} tasks", file=sys.stderr)
    result = await ablate(
        tasks,
        config.selection,
        grid,
        lambda selection: make_backends(config, args, selection),
        seed=args.seed,
        pools=pools,
        progress=not args.no_progress,
    )

    path = formatter.save_ablation(result, output_path(args, "sweep.csv"))
    print(formatter.format_ablation_table(result))
    print(f"📁 Sweep saved to: {path}", file=sys.stderr)
    incomplete = [v.name for v in result.variants if not v.report.complete]
    return EXIT_BACKEND if incomplete else EXIT_OK


async def cmd_reward_export(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    tasks = load_tasks(args)
    pools = load_pools(args.pools) if args.pools else {}
    config = resolve_config(args)
    selection = config.selection
    backends = make_backends(config, args)
    executor = SqlExecutor(selection)

    try:
        scored_pools, gold = await prepare_pools(
            tasks, pools, selection, backends, executor, score=args.policy == "hard_top15"
        )
    finally:
        executor.shutdown()

    pairs, skipped = build_pairs(
        tasks,
        scored_pools,
        gold,
        policy=args.policy,
        seed=args.seed,
        float_tol=selection.float_tol,
        order_sensitive=selection.order_sensitive,
        token_budget=selection.token_budget,
    )
    rewards = summary = None
    if args.score:
        rewards, summary = await score_pairs(
            {t.task_id: t for t in tasks}, pairs, backends.pairwise, selection.lambda_c
        )

    path = OutputFormatter(settings.output_dir).save_pairs(pairs, output_path(args, "pairs.jsonl"), rewards, summary)
    print(f"✅ Exported {len(pairs)} pairs, skipped {skipped or 'none'}", file=sys.stderr)
    if summary is not None:
        print(
            f"   accuracy {summary.binary_accuracy}  consistency {summary.input_consistency}  "
            f"mean reward {summary.mean_reward}",
            file=sys.stderr,
        )
    print(f"📁 Pairs saved to: {path}", file=sys.stderr)
    return EXIT_OK


async def cmd_judge(args: argparse.Namespace, parser: argparse.ArgumentParser) -> int:
    task = resolve_task(args, parser)
    if args.pool is None:
        parser.error("judge needs --pool")
    config = resolve_config(args)
    backends = make_backends(config, args)
    executor = SqlExecutor(config.selection)
    try:
        pool = await executor.execute_pool(task.db_ref, initial_pool(load_pool(args.pool)))
    finally:
        executor.shutdown()

    decision = await backends.judge.judge_pool(task, judge_order(pool, config.selection.float_tol))
    print(json.dumps(decision.to_dict(), indent=2, sort_keys=True))
    return EXIT_OK


COMMANDS = {
    "select": cmd_select,
    "evaluate": cmd_evaluate,
    "ablate": cmd_ablate,
    "reward-export": cmd_reward_export,
    "judge": cmd_judge,
}


def main(argv: Optional[list[str]] = None) -> int:
    """Main entry point."""
    parser = build_parser()
    args = parser.parse_args(argv)

    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.WARNING,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        return asyncio.run(COMMANDS[args.command](args, parser))
    except (ConfigurationError, DatasetError) as e:
        print(f"❌ {e}", file=sys.stderr)
        return EXIT_CONFIG
    except BackendError as e:
        print(f"❌ Backend failure: {e}", file=sys.stderr)
        return EXIT_BACKEND


def cli() -> None:
    """CLI entry point."""
    sys.exit(main())


if __name__ == "__main__":
    cli()
