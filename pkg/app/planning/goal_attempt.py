# =============================================================================
# Tabletop Rearrangement Planner - Goal Attempting
# v1.0.0
# =============================================================================
# Greedy completion of any search state into a full plan. The lazy-buffer
# local solver supplies the object moves; this module only decides where
# the robot stands while executing them.
#
#   SINGLE    every move is picked and placed from the closest boundary
#             points.
#   MULTIPLE  repeatedly pick the standing point that performs the longest
#             in-order run of the remaining operations (ties: closest to
#             the robot). A run ending on a pick is finished at the closest
#             placing point for the held object.
#
# The resulting sequence is re-simulated before it is returned.
# =============================================================================

from __future__ import annotations

import logging

import numpy as np

from app.config import LOCAL_SOLVER_RETRIES
from app.planning.buffers import trlb_local_solve
from app.planning.expand import ActionStrategy
from app.planning.regions import overlay_cells, placing_points
from app.world.domain import (
    Arrangement,
    Operation,
    OperationSequence,
    RearrTriple,
    Scene,
    SimulationError,
    State,
    is_goal,
    simulate,
    triples_to_single_ops,
)
from app.world.geometry import EPS, PerimeterCoord, pose_valid, reach_intervals, travel_cost

logger = logging.getLogger(__name__)


def executable_prefix(arrangement: Arrangement, triples: list[RearrTriple], scene: Scene) -> int:
    """Number of leading moves whose place footprints are free when reached in order."""
    poses = list(arrangement.poses)
    count = 0
    for t in triples:
        if not pose_valid(scene.table, poses, t.place_pose, arrangement.radius, ignore=(t.obj,)):
            break
        poses[t.obj] = t.place_pose
        count += 1
    return count


def _best_standing_point(
    ops: list[Operation], robot: PerimeterCoord, scene: Scene
) -> tuple[PerimeterCoord, int]:
    """Standing point running the most leading operations, closest to robot on ties."""
    labelled = {i: reach_intervals(scene.table, op.pose, scene.rho) for i, op in enumerate(ops)}
    best_s, best_run, best_travel = robot, 0, float("inf")
    for cell, labels in overlay_cells(labelled, scene.perimeter):
        run = 0
        while run in labels:
            run += 1
        if run == 0:
            continue
        points = list(cell.endpoints(scene.perimeter))
        if cell.contains(robot, scene.perimeter):
            points.append(robot)
        for s in points:
            travel = travel_cost(scene.table, robot, s)
            if run > best_run or (run == best_run and travel < best_travel - EPS):
                best_s, best_run, best_travel = s, run, travel
    return best_s, best_run


def _multiple_ops(state: State, triples: list[RearrTriple], scene: Scene) -> OperationSequence | None:
    remaining = list(triples)
    arrangement = state.arrangement
    robot = state.robot
    seq: list[Operation] = []

    while remaining:
        prefix = remaining[: max(executable_prefix(arrangement, remaining, scene), 1)]
        pending: list[Operation] = []
        for t in prefix:
            pending.append(Operation.pick(t.obj, t.pick_pose, robot))
            pending.append(Operation.place(t.obj, t.place_pose, robot))

        s, run = _best_standing_point(pending, robot, scene)
        if run == 0:
            logger.debug("Goal attempt stuck: object %d is out of reach everywhere.", prefix[0].obj)
            return None
        done = [op.at(s) for op in pending[:run]]
        robot = s

        if done[-1].is_pick:
            place = pending[run]
            intervals = reach_intervals(scene.table, place.pose, scene.rho)
            points = placing_points(scene.table, scene.rho, s, intervals, place.pose)
            robot = min(points, key=lambda q: travel_cost(scene.table, s, q))
            done.append(place.at(robot))
            run += 1

        seq.extend(done)
        moved = run // 2
        for t in remaining[:moved]:
            arrangement = arrangement.moved(t.obj, t.place_pose)
        remaining = remaining[moved:]

    return tuple(seq)


def goal_attempt(
    state: State,
    goal: Arrangement,
    scene: Scene,
    strategy: ActionStrategy,
    rng: np.random.Generator,
    retries: int = LOCAL_SOLVER_RETRIES,
) -> OperationSequence | None:
    """Feasible completion from state to goal, or None when the local solver fails."""
    if is_goal(state, goal, scene.tol):
        return ()
    triples = trlb_local_solve(state.arrangement, goal, scene.table, rng, retries=retries, tol=scene.tol)
    if triples is None:
        return None

    if strategy is ActionStrategy.SINGLE:
        seq = triples_to_single_ops(scene.table, triples)
    else:
        seq = _multiple_ops(state, triples, scene)
        if seq is None:
            return None

    try:
        end = simulate(state, seq, scene)
    except SimulationError as exc:
        logger.debug("Goal attempt rejected: %s", exc)
        return None
    if not is_goal(end, goal, scene.tol):
        return None
    return seq
