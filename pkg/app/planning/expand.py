# =============================================================================
# Tabletop Rearrangement Planner - Successor Generation
# v1.0.0
# =============================================================================
# Expands one search state into (operation sequence, successor state) pairs.
#
#   SINGLE    one pick-and-place per successor. The robot picks from the
#             boundary point closest to the object and places from the
#             point closest to the target. A free goal gives one successor;
#             an occupied goal gives up to buffer_samples buffer successors.
#
#   MULTIPLE  one successor per standing location (and explicit choice):
#             every implicit object is rearranged from that location, then
#             optionally one explicit object is carried to a placing point.
#             Sequences follow MB + DO + [MBWO + PO]*y + RESET, y in {0, 1}.
#
# Every emitted sequence is replayed with simulate(); anything that fails
# is dropped here so the search never sees an infeasible edge.
# =============================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass
from enum import Enum
from typing import NamedTuple

import numpy as np

from app.config import BUFFER_SAMPLES_MULTIPLE, BUFFER_SAMPLES_SINGLE
from app.planning.buffers import (
    AbstractTarget,
    allocate_buffers,
    footprints_overlap,
    insert_explicit_evictions,
    minimal_running_buffer_plan,
)
from app.planning.regions import (
    StandingCandidate,
    efficient_standing_locations,
    manipulation_regions,
    placing_points,
    reduce_regions,
)
from app.world.domain import (
    Arrangement,
    ObjectId,
    Operation,
    OperationSequence,
    OpType,
    Scene,
    SimulationError,
    State,
    misplaced_objects,
    simulate,
    single_relocation,
)
from app.world.geometry import Point2, pose_valid, reach_intervals, sample_free_pose

logger = logging.getLogger(__name__)


class ActionStrategy(str, Enum):
    SINGLE = "single"
    MULTIPLE = "multiple"


@dataclass(frozen=True)
class ExpansionParams:
    strategy: ActionStrategy = ActionStrategy.MULTIPLE
    buffer_samples: int | None = None
    region_reduction: bool = True

    @property
    def samples(self) -> int:
        if self.buffer_samples is not None:
            return self.buffer_samples
        return BUFFER_SAMPLES_SINGLE if self.strategy is ActionStrategy.SINGLE else BUFFER_SAMPLES_MULTIPLE


class Successor(NamedTuple):
    sequence: OperationSequence
    state: State


@dataclass(frozen=True)
class ImplicitSplit:
    """Objects rearranged in place from one standing location, and the rest.

    arrangement is the table after implicit_seq has run.
    """

    implicit: frozenset[ObjectId]
    explicit: frozenset[ObjectId]
    implicit_seq: OperationSequence
    arrangement: Arrangement


def _checked(state: State, seq: OperationSequence, scene: Scene) -> Successor | None:
    if not seq:
        return None
    try:
        child = simulate(state, seq, scene)
    except SimulationError as exc:
        logger.debug("Dropping successor: %s", exc)
        return None
    return Successor(seq, child)


def _pending_goals(arrangement: Arrangement, goal: Arrangement, skip: ObjectId, tol: float) -> list[Point2]:
    return [goal.pose(j) for j in misplaced_objects(arrangement, goal, tol) if j != skip]


# ---------------------------------------------------------------------------
# Single relocation
# ---------------------------------------------------------------------------


def successors_single(
    state: State,
    goal: Arrangement,
    scene: Scene,
    rng: np.random.Generator,
    buffer_samples: int = BUFFER_SAMPLES_SINGLE,
) -> list[Successor]:
    """One pick-and-place successor per misplaced object and target.

    Args:
        state: State to expand.
        goal: Goal arrangement.
        scene: Table, reach and pose tolerance.
        rng: Source for buffer samples.
        buffer_samples: Buffers tried when an object's goal is occupied.

    Returns:
        Successors whose sequences replay cleanly from state.
    """
    arr = state.arrangement
    table = scene.table
    out: list[Successor] = []

    for k in misplaced_objects(arr, goal, scene.tol):
        current = arr.pose(k)
        target = goal.pose(k)
        if pose_valid(table, arr.poses, target, arr.radius, ignore=(k,)):
            targets = [target]
        else:
            targets = []
            for _ in range(buffer_samples):
                buffer = sample_free_pose(
                    table,
                    arr.array,
                    arr.radius,
                    rng,
                    forbidden_poses=_pending_goals(arr, goal, k, scene.tol),
                    ignore=(k,),
                )
                if buffer is not None:
                    targets.append(buffer)

        for place_pose in targets:
            succ = _checked(state, single_relocation(table, k, current, place_pose), scene)
            if succ is not None:
                out.append(succ)

    logger.debug("Single expansion: %d successors.", len(out))
    return out


# ---------------------------------------------------------------------------
# Multiple relocation
# ---------------------------------------------------------------------------


def _blamed_object(
    plan, failed: int, potential: set[ObjectId], goal: Arrangement, start: Arrangement
) -> ObjectId | None:
    action = plan[failed]
    if action.obj in potential:
        return action.obj
    # A failed explicit eviction is charged to the first implicit move it was clearing.
    blocked = start.pose(action.obj)
    later = [a for a in plan[failed + 1 :] if a.target is AbstractTarget.TO_GOAL]
    for a in later:
        if footprints_overlap(goal.pose(a.obj), blocked, start.radius):
            return a.obj
    return later[0].obj if later else None


def classify_and_verify(
    state: State,
    goal: Arrangement,
    candidate: StandingCandidate,
    scene: Scene,
    rng: np.random.Generator,
) -> ImplicitSplit:
    """Split the region's objects into implicit and explicit ones.

    Objects the region can both pick and place are implicit candidates.
    Their abstract plan is realized with every pose kept within reach of
    the standing location; the object behind a failed allocation becomes
    explicit and the check repeats.

    Args:
        state: State the robot works from.
        goal: Goal arrangement.
        candidate: Standing location and the region it belongs to.
        scene: Table, reach and pose tolerance.
        rng: Source for buffer samples.

    Returns:
        The split. With no verifiable implicit set, every region object is
        explicit and implicit_seq is empty.
    """
    arr = state.arrangement
    location = candidate.location
    ops = candidate.region.op_dict
    potential = {k for k, op_set in ops.items() if OpType.PLACE in op_set}
    explicit = {k for k in ops if k not in potential}

    while potential:
        current = {k: arr.pose(k) for k in potential}
        goals = {k: goal.pose(k) for k in potential}
        plan = minimal_running_buffer_plan(current, goals, arr.radius, scene.tol)
        plan = insert_explicit_evictions(plan, goals, {e: arr.pose(e) for e in explicit}, arr.radius)
        # Goals of objects left for later stay clear of buffers too.
        others = [goal.pose(j) for j in misplaced_objects(arr, goal, scene.tol) if j not in potential]
        allocation = allocate_buffers(
            plan, arr, goals, scene.table, rng, reach_constraint=(location, scene.rho), forbidden=others
        )

        if allocation.ok:
            seq: list[Operation] = []
            poses = arr
            for t in allocation.triples:
                seq.append(Operation.pick(t.obj, t.pick_pose, location))
                seq.append(Operation.place(t.obj, t.place_pose, location))
                poses = poses.moved(t.obj, t.place_pose)
            return ImplicitSplit(frozenset(potential), frozenset(explicit), tuple(seq), poses)

        culprit = _blamed_object(plan, allocation.failed_index, potential, goal, arr)
        if culprit is None or culprit not in potential:
            break
        logger.debug("Object %d reclassified explicit at s=%.4f.", culprit, location)
        potential.discard(culprit)
        explicit.add(culprit)

    return ImplicitSplit(frozenset(), frozenset(explicit | potential), (), arr)


def _explicit_branches(
    split: ImplicitSplit,
    obj: ObjectId,
    goal: Arrangement,
    scene: Scene,
    location: float,
    rng: np.random.Generator,
    buffer_samples: int,
) -> list[OperationSequence]:
    arr = split.arrangement
    table = scene.table
    target = goal.pose(obj)
    if pose_valid(table, arr.poses, target, arr.radius, ignore=(obj,)):
        targets = [target]
    else:
        targets = []
        for _ in range(buffer_samples):
            buffer = sample_free_pose(
                table,
                arr.array,
                arr.radius,
                rng,
                forbidden_poses=_pending_goals(arr, goal, obj, scene.tol),
                ignore=(obj,),
            )
            if buffer is not None:
                targets.append(buffer)

    pick = Operation.pick(obj, arr.pose(obj), location)
    branches: list[OperationSequence] = []
    for place_pose in targets:
        intervals = reach_intervals(table, place_pose, scene.rho)
        if not intervals:
            continue
        if any(iv.contains(location, scene.perimeter) for iv in intervals):
            points = [location]
        else:
            points = placing_points(table, scene.rho, location, intervals, place_pose)
        for s in points:
            branches.append(split.implicit_seq + (pick, Operation.place(obj, place_pose, s)))
    return branches


def successors_multiple(
    state: State,
    goal: Arrangement,
    scene: Scene,
    rng: np.random.Generator,
    params: ExpansionParams = ExpansionParams(),
) -> list[Successor]:
    """Successors grouped by standing location.

    Args:
        state: State to expand.
        goal: Goal arrangement.
        scene: Table, reach and pose tolerance.
        rng: Source for buffer samples.
        params: Region reduction flag and buffer sample count.

    Returns:
        For every standing candidate, the implicit-only sequence (if any) and
        one sequence per explicit object and placing point.
    """
    regions = manipulation_regions(state, goal, scene)
    if params.region_reduction:
        regions = reduce_regions(regions)
    candidates = efficient_standing_locations(state, regions, scene.table)

    out: list[Successor] = []
    for candidate in candidates:
        split = classify_and_verify(state, goal, candidate, scene, rng)
        sequences: list[OperationSequence] = []
        if split.implicit_seq:
            sequences.append(split.implicit_seq)
        for obj in sorted(split.explicit):
            sequences.extend(
                _explicit_branches(split, obj, goal, scene, candidate.location, rng, params.samples)
            )
        for seq in sequences:
            succ = _checked(state, seq, scene)
            if succ is not None:
                out.append(succ)

    logger.debug(
        "Multiple expansion: %d regions, %d standing candidates, %d successors.",
        len(regions),
        len(candidates),
        len(out),
    )
    return out


def expand_state(
    state: State,
    goal: Arrangement,
    scene: Scene,
    rng: np.random.Generator,
    params: ExpansionParams = ExpansionParams(),
) -> list[Successor]:
    """Dispatch to successors_single or successors_multiple by params.strategy."""
    if params.strategy is ActionStrategy.SINGLE:
        return successors_single(state, goal, scene, rng, params.samples)
    return successors_multiple(state, goal, scene, rng, params)
