# =============================================================================
# Tabletop Rearrangement Planner - Runner
# v1.0.0
# =============================================================================
# What the CLI subcommands actually do:
#
#   solve     run one named planner on one scenario, write plan + events
#   validate  re-simulate and re-cost a plan file against its scenario
#   bench     trials x planners x n x mc grid, anytime logs bucketized
#             into fixed time steps with carry-forward of the last best
#
# Bench instances are independent; with workers > 1 they run in a process
# pool and the rows are sorted by key before writing.
# =============================================================================

from __future__ import annotations

import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable, Iterable, Sequence

import numpy as np

from app.baselines.mcts import mcts_plan
from app.baselines.trlb import trlb_result
from app.bench.scenarios import Scenario, gen
from app.config import BENCH_BUCKET_MS, MANIPULATION_COST
from app.planning.anytime import AnytimeEvent, NoSolutionWithinTimeout, PlanResult, SolverFailure
from app.planning.search import PlannerConfig, plan as anytime_plan
from app.storage.files import result_stem, write_events_csv, write_json, write_rows_csv
from app.world.domain import CostModel, Plan, SimulationError, is_goal, sequence_cost, simulate

logger = logging.getLogger(__name__)

COST_TOLERANCE = 1e-9

BENCH_HEADER = ("planner", "n", "mc", "seed", "bucket_ms", "best_cost", "status")
SUMMARY_HEADER = ("planner", "n", "mc", "bucket_ms", "mean_cost", "solved")

PlannerFn = Callable[[Scenario, PlannerConfig, CostModel], PlanResult]


def _run_trlb(scenario: Scenario, config: PlannerConfig, cm: CostModel) -> PlanResult:
    rng = np.random.default_rng(config.seed)
    return trlb_result(scenario.start_state, scenario.goal, scenario.scene, cm, rng, config.local_solver_retries)


def _run_mcts(scenario: Scenario, config: PlannerConfig, cm: CostModel) -> PlanResult:
    return mcts_plan(scenario.start_state, scenario.goal, scenario.scene, config, cm)


def _run_anytime(scenario: Scenario, config: PlannerConfig, cm: CostModel) -> PlanResult:
    return anytime_plan(scenario.start_state, scenario.goal, scenario.scene, config, cm)


PLANNERS: dict[str, PlannerFn] = {
    "strap2": _run_anytime,
    "strap": _run_anytime,
    "orla": _run_anytime,
    "trlb": _run_trlb,
    "mcts": _run_mcts,
}


def run_planner(scenario: Scenario, planner: str, config: PlannerConfig, mc: float) -> PlanResult:
    cm = CostModel(mc, scenario.table)
    result = PLANNERS[planner](scenario, config, cm)
    result.plan.meta.setdefault("mc", mc)
    result.plan.meta.setdefault("seed", config.seed)
    return result


# ---------------------------------------------------------------------------
# solve / validate
# ---------------------------------------------------------------------------


def solve(
    scenario: Scenario,
    planner: str,
    config: PlannerConfig,
    mc: float,
    out_dir: Path,
) -> tuple[PlanResult, Path, Path]:
    """Run planner on scenario and write <stem>_plan.json and <stem>_events.csv into out_dir."""
    result = run_planner(scenario, planner, config, mc)
    stem = result_stem(planner, config.strategy.value, config.seed)
    plan_path = write_json(out_dir / f"{stem}_plan.json", result.plan.to_dict())
    events_path = write_events_csv(out_dir / f"{stem}_events.csv", result.events)
    return result, plan_path, events_path


@dataclass
class ValidationReport:
    ok: bool
    message: str
    recomputed_cost: float | None = None

    def __str__(self) -> str:
        return f"{'PASS' if self.ok else 'FAIL'}: {self.message}"


def validate(scenario: Scenario, plan: Plan, mc: float | None = None) -> ValidationReport:
    """Replay plan on scenario and compare the recomputed cost with the reported one."""
    if mc is None:
        mc = float(plan.meta.get("mc", MANIPULATION_COST))
    start = scenario.start_state
    try:
        end = simulate(start, plan.sequence, scenario.scene)
    except SimulationError as exc:
        return ValidationReport(False, f"{type(exc).__name__} at {exc}")
    if not is_goal(end, scenario.goal, scenario.scene.tol):
        return ValidationReport(False, "plan does not reach the goal arrangement")

    cost = sequence_cost(plan.sequence, start.robot, CostModel(mc, scenario.table))
    if abs(cost - plan.total_cost) > COST_TOLERANCE:
        return ValidationReport(False, f"cost mismatch: reported {plan.total_cost!r}, recomputed {cost!r}", cost)
    return ValidationReport(True, f"{len(plan.sequence)} operations, cost {cost:.6f}", cost)


# ---------------------------------------------------------------------------
# bench
# ---------------------------------------------------------------------------


def bucketize(events: Sequence[AnytimeEvent], timeout: float, bucket_ms: int = BENCH_BUCKET_MS) -> list[tuple[int, float | None]]:
    """Best cost at the end of every bucket up to timeout; None before the first solution."""
    limit_ms = int(math.ceil(timeout * 1000.0 / bucket_ms)) * bucket_ms
    series: list[tuple[int, float | None]] = []
    best: float | None = None
    idx = 0
    for bucket in range(bucket_ms, limit_ms + bucket_ms, bucket_ms):
        while idx < len(events) and events[idx].elapsed * 1000.0 <= bucket:
            best = events[idx].best_cost if best is None else min(best, events[idx].best_cost)
            idx += 1
        series.append((bucket, best))
    # Improvements landing after the last bucket still count for the final one.
    for event in events[idx:]:
        best = event.best_cost if best is None else min(best, event.best_cost)
    if series and best is not None:
        series[-1] = (series[-1][0], best)
    return series


@dataclass(frozen=True)
class BenchJob:
    planner: str
    n: int
    mc: float
    seed: int
    timeout: float
    bucket_ms: int
    overrides: dict[str, Any] = field(default_factory=dict)


def run_job(job: BenchJob) -> list[tuple[Any, ...]]:
    """Rows of BENCH_HEADER for one bench instance; failures become a status."""
    status = "ok"
    events: list[AnytimeEvent] = []
    try:
        scenario = gen(job.n, seed=job.seed)
        config = PlannerConfig.preset(job.planner, timeout=job.timeout, seed=job.seed, **job.overrides)
        events = run_planner(scenario, job.planner, config, job.mc).events
    except NoSolutionWithinTimeout:
        status = "no_solution"
    except (SolverFailure, ValueError) as exc:
        status = f"error:{type(exc).__name__}"
        logger.warning("Bench %s n=%d mc=%g seed=%d failed: %s", job.planner, job.n, job.mc, job.seed, exc)
    except Exception as exc:
        # Anything else is a planner bug; the rest of the grid still runs.
        status = f"error:{type(exc).__name__}"
        logger.exception("Bench %s n=%d mc=%g seed=%d crashed.", job.planner, job.n, job.mc, job.seed)

    return [
        (job.planner, job.n, job.mc, job.seed, bucket, "" if cost is None else cost, status)
        for bucket, cost in bucketize(events, job.timeout, job.bucket_ms)
    ]


def summarize(rows: Iterable[Sequence[Any]]) -> list[tuple[Any, ...]]:
    """Mean best cost per (planner, n, mc, bucket) over the trials solved by then."""
    groups: dict[tuple[Any, ...], list[float]] = {}
    for planner, n, mc, _seed, bucket, cost, _status in rows:
        values = groups.setdefault((planner, n, mc, bucket), [])
        if cost != "":
            values.append(float(cost))
    return [
        (*key, float(np.mean(values)) if values else "", len(values))
        for key, values in sorted(groups.items())
    ]


def bench(
    n_list: Sequence[int],
    planners: Sequence[str],
    trials: int,
    timeout: float,
    mc_list: Sequence[float],
    seed: int,
    out_dir: Path,
    workers: int = 1,
    bucket_ms: int = BENCH_BUCKET_MS,
    overrides: dict[str, Any] | None = None,
) -> tuple[Path, Path]:
    """Run the benchmark grid and write bench.csv plus summary.csv into out_dir."""
    for name in planners:
        if name not in PLANNERS:
            raise ValueError(f"Unknown planner {name!r}.")
    jobs = [
        BenchJob(planner, n, mc, seed + trial, timeout, bucket_ms, dict(overrides or {}))
        for planner in planners
        for n in n_list
        for mc in mc_list
        for trial in range(trials)
    ]
    logger.info("Bench: %d instances, %d worker(s).", len(jobs), workers)

    rows: list[tuple[Any, ...]] = []
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            for done, job_rows in enumerate(pool.map(run_job, jobs), start=1):
                rows.extend(job_rows)
                logger.info("Bench progress: %d/%d", done, len(jobs))
    else:
        for done, job in enumerate(jobs, start=1):
            rows.extend(run_job(job))
            logger.info("Bench progress: %d/%d", done, len(jobs))

    rows.sort(key=lambda r: (r[0], r[1], r[2], r[3], r[4]))
    bench_path = write_rows_csv(out_dir / "bench.csv", BENCH_HEADER, rows)
    summary_path = write_rows_csv(out_dir / "summary.csv", SUMMARY_HEADER, summarize(rows))
    return bench_path, summary_path
