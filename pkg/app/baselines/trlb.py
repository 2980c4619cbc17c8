# =============================================================================
# Tabletop Rearrangement Planner - TRLB Baseline
# v1.0.0
# =============================================================================
# Fast feasible planner: one run of the lazy-buffer local solver, executed
# with the single-relocation standing rule. Not anytime; its log holds a
# single event.
# =============================================================================

from __future__ import annotations

import logging

import numpy as np

from app.config import LOCAL_SOLVER_RETRIES
from app.planning.anytime import BestPlanTracker, PlanResult, SolverFailure, check_instance
from app.planning.buffers import trlb_local_solve
from app.world.domain import Arrangement, CostModel, Plan, Scene, State, triples_to_single_ops

logger = logging.getLogger(__name__)


def trlb_plan(
    start: State,
    goal: Arrangement,
    scene: Scene,
    cm: CostModel,
    rng: np.random.Generator,
    retries: int = LOCAL_SOLVER_RETRIES,
) -> Plan:
    """Feasible plan from the local solver.

    Raises:
        InvalidInstance: If the instance is malformed.
        SolverFailure: If buffer allocation fails on every retry.
    """
    return trlb_result(start, goal, scene, cm, rng, retries).plan


def trlb_result(
    start: State,
    goal: Arrangement,
    scene: Scene,
    cm: CostModel,
    rng: np.random.Generator,
    retries: int = LOCAL_SOLVER_RETRIES,
) -> PlanResult:
    check_instance(start, goal, scene)
    tracker = BestPlanTracker(start, goal, scene, cm, label="trlb")

    triples = trlb_local_solve(start.arrangement, goal, scene.table, rng, retries=retries, tol=scene.tol)
    if triples is None:
        raise SolverFailure(f"Buffer allocation failed after {retries + 1} attempts.")

    if not tracker.offer(triples_to_single_ops(scene.table, triples)):
        raise SolverFailure("Local solver moves do not replay to the goal.")
    return tracker.result(planner="trlb", strategy="single", moves=len(triples))
