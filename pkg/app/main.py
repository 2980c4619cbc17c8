# =============================================================================
# Tabletop Rearrangement Planner - Application Entry Point
# v1.0.0
# =============================================================================
# Command-line front end:
#
#   gen       sample a scenario and write it as JSON
#   solve     run one planner on a scenario; writes plan JSON + events CSV
#   validate  re-simulate a plan against its scenario, print PASS/FAIL
#   bench     run a planners x n x mc x trials grid, write bench CSVs
#
# Steps for every command:
#   1. Configure logging and validate .env settings.
#   2. Register signal handlers so Ctrl-C stops cleanly.
#   3. Dispatch to the subcommand; planner errors become exit status 1.
#
# Run with:  python app/main.py <command> [options]
# =============================================================================

from __future__ import annotations

import argparse
import logging
import signal
import sys
from pathlib import Path

# ---------------------------------------------------------------------------
# sys.path fix so "python app/main.py" works from the project root.
# ---------------------------------------------------------------------------
_project_root = str(Path(__file__).resolve().parent.parent)
if _project_root not in sys.path:
    sys.path.insert(0, _project_root)

from app.config import (  # noqa: E402
    BENCH_BUCKET_MS,
    MANIPULATION_COST,
    OBJECT_RADIUS,
    PLANNER_TIMEOUT,
    REARRANGE_SEED,
    RESULTS_DIR,
    TABLE_HEIGHT,
    TABLE_WIDTH,
    setup_logging,
    validate_config,
)
from app.bench.runner import PLANNERS, bench, solve, validate  # noqa: E402
from app.bench.scenarios import DensityTooHigh, Scenario, gen  # noqa: E402
from app.planning.anytime import InvalidInstance, NoSolutionWithinTimeout, SolverFailure  # noqa: E402
from app.planning.expand import ActionStrategy  # noqa: E402
from app.planning.search import PlannerConfig  # noqa: E402
from app.storage.files import read_json, run_directory, write_json  # noqa: E402
from app.world.domain import Plan  # noqa: E402
from app.world.geometry import TableSpec  # noqa: E402

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_INTERRUPTED = 130


def _handle_signal(signum: int, _frame) -> None:
    sig_name = signal.Signals(signum).name
    logger.info("Received %s, stopping.", sig_name)
    raise SystemExit(EXIT_INTERRUPTED)


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------


def _add_planner_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--strategy", choices=[s.value for s in ActionStrategy], default=None)
    parser.add_argument("--timeout", type=float, default=PLANNER_TIMEOUT, help="seconds per planner run")
    parser.add_argument("--seed", type=int, default=None, help=f"default: REARRANGE_SEED ({REARRANGE_SEED})")
    parser.add_argument("--no-region-reduction", action="store_true")
    parser.add_argument("--re-explore-prob", type=float, default=None)
    parser.add_argument("--buffer-samples", type=int, default=None)
    parser.add_argument("--max-iterations", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="rearrange", description="Tabletop rearrangement planner.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_gen = sub.add_parser("gen", help="generate a random scenario")
    p_gen.add_argument("--n", type=int, required=True)
    p_gen.add_argument("--seed", type=int, default=None)
    p_gen.add_argument("--width", type=float, default=TABLE_WIDTH)
    p_gen.add_argument("--height", type=float, default=TABLE_HEIGHT)
    p_gen.add_argument("--radius", type=float, default=OBJECT_RADIUS)
    p_gen.add_argument("--rho", type=float, default=None, help="default: half of the smaller table side")
    p_gen.add_argument("--out", type=Path, default=None, help="scenario JSON path")

    p_solve = sub.add_parser("solve", help="run one planner on a scenario")
    p_solve.add_argument("scenario", type=Path)
    p_solve.add_argument("--planner", choices=sorted(PLANNERS), default="strap2")
    p_solve.add_argument("--mc", type=float, default=MANIPULATION_COST)
    p_solve.add_argument("--out", type=Path, default=None, help="output directory")
    _add_planner_flags(p_solve)

    p_val = sub.add_parser("validate", help="check a plan against its scenario")
    p_val.add_argument("scenario", type=Path)
    p_val.add_argument("plan", type=Path)
    p_val.add_argument("--mc", type=float, default=None, help="default: the plan's recorded MC")

    p_bench = sub.add_parser("bench", help="run the benchmark grid")
    p_bench.add_argument("--n", type=int, nargs="+", required=True)
    p_bench.add_argument("--planner", nargs="+", choices=sorted(PLANNERS), default=["strap2"])
    p_bench.add_argument("--trials", type=int, default=1)
    p_bench.add_argument("--mc", type=float, nargs="+", default=[MANIPULATION_COST])
    p_bench.add_argument("--workers", type=int, default=1)
    p_bench.add_argument("--bucket-ms", type=int, default=BENCH_BUCKET_MS)
    p_bench.add_argument("--out", type=Path, default=None, help="output directory")
    _add_planner_flags(p_bench)

    return parser


def _seed(args: argparse.Namespace) -> int:
    return REARRANGE_SEED if args.seed is None else args.seed


def _overrides(args: argparse.Namespace) -> dict:
    return {
        "strategy": args.strategy,
        "re_explore_prob": args.re_explore_prob,
        "buffer_samples": args.buffer_samples,
        "max_iterations": args.max_iterations,
        "region_reduction": False if args.no_region_reduction else None,
    }


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------


def cmd_gen(args: argparse.Namespace) -> int:
    seed = _seed(args)
    scenario = gen(args.n, TableSpec(args.width, args.height), args.radius, seed, rho=args.rho)
    out = args.out or RESULTS_DIR / f"scenario_n{args.n}_seed{seed}.json"
    write_json(out, scenario.to_dict())
    print(out)
    return EXIT_OK


def cmd_solve(args: argparse.Namespace) -> int:
    scenario = Scenario.from_dict(read_json(args.scenario))
    config = PlannerConfig.preset(args.planner, timeout=args.timeout, seed=_seed(args), **_overrides(args))
    out_dir = args.out or run_directory()
    result, plan_path, events_path = solve(scenario, args.planner, config, args.mc, out_dir)
    logger.info("Best cost %.4f with %d operations.", result.plan.total_cost, len(result.plan.sequence))
    print(plan_path)
    print(events_path)
    return EXIT_OK


def cmd_validate(args: argparse.Namespace) -> int:
    scenario = Scenario.from_dict(read_json(args.scenario))
    plan = Plan.from_dict(read_json(args.plan))
    report = validate(scenario, plan, args.mc)
    print(report)
    return EXIT_OK if report.ok else EXIT_FAILURE


def cmd_bench(args: argparse.Namespace) -> int:
    overrides = {k: v for k, v in _overrides(args).items() if v is not None}
    out_dir = args.out or run_directory()
    bench_path, summary_path = bench(
        args.n,
        args.planner,
        args.trials,
        args.timeout,
        args.mc,
        _seed(args),
        out_dir,
        workers=args.workers,
        bucket_ms=args.bucket_ms,
        overrides=overrides,
    )
    print(bench_path)
    print(summary_path)
    return EXIT_OK


COMMANDS = {
    "gen": cmd_gen,
    "solve": cmd_solve,
    "validate": cmd_validate,
    "bench": cmd_bench,
}


def main(argv: list[str] | None = None) -> int:
    """Application entry point; returns the process exit status."""
    args = build_parser().parse_args(argv)

    # ------------------------------------------------------------------
    # Step 1: Logging and configuration validation
    # ------------------------------------------------------------------
    setup_logging()
    try:
        validate_config()
    except EnvironmentError as exc:
        logger.critical(str(exc))
        return EXIT_FAILURE

    # ------------------------------------------------------------------
    # Step 2: Register signal handlers
    # ------------------------------------------------------------------
    signal.signal(signal.SIGINT, _handle_signal)
    signal.signal(signal.SIGTERM, _handle_signal)

    # ------------------------------------------------------------------
    # Step 3: Dispatch
    # ------------------------------------------------------------------
    try:
        return COMMANDS[args.command](args)
    except (NoSolutionWithinTimeout, SolverFailure) as exc:
        logger.error("Planner failed: %s", exc)
    except (InvalidInstance, DensityTooHigh) as exc:
        logger.error("Bad instance: %s", exc)
    except (ValueError, OSError) as exc:
        logger.error("%s", exc)
    return EXIT_FAILURE


# ---------------------------------------------------------------------------
# Allow running directly with: python app/main.py
# ---------------------------------------------------------------------------
if __name__ == "__main__":
    sys.exit(main())
