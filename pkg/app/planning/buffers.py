# =============================================================================
# Tabletop Rearrangement Planner - Buffers
# v1.0.0
# =============================================================================
# Abstract planning with temporary (buffer) placements and lazy allocation.
#
#   minimal_running_buffer_plan()  orders "to goal" moves so that the peak
#       number of objects parked in buffers at the same time is minimal.
#       Exact DP over subsets of objects already at goal, vectorized with
#       numpy over all 2^n subset masks, one popcount layer at a time.
#   insert_explicit_evictions()    clears goals occupied by objects the
#       planner will not place from the current standing location.
#   allocate_buffers()             turns an abstract plan into concrete
#       (object, pick pose, place pose) moves by sampling buffer poses.
#   trlb_local_solve()             the two steps above with retries: the
#       fast feasible solver used by goal attempting and the TRLB baseline.
#
# Dependency rule: object a waits for object b when goal(a) overlaps the
# current pose of b. An object that must leave its pose before it can go
# to its own goal is moved to a buffer at the latest possible moment.
# =============================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from typing import Mapping, NamedTuple, Sequence

import numpy as np

from app.config import BUFFER_SAMPLE_ATTEMPTS, LOCAL_SOLVER_RETRIES, MAX_DP_OBJECTS, POSE_TOLERANCE
from app.world.domain import Arrangement, ObjectId, RearrTriple, misplaced_objects
from app.world.geometry import EPS, PerimeterCoord, Point2, TableSpec, pose_valid, sample_free_pose, within_reach

logger = logging.getLogger(__name__)


class AbstractTarget(str, Enum):
    TO_GOAL = "to_goal"
    TO_BUFFER = "to_buffer"


class AbstractAction(NamedTuple):
    obj: ObjectId
    target: AbstractTarget


AbstractPlan = tuple[AbstractAction, ...]


@dataclass
class BufferBudget:
    max_running: int = 0


@dataclass
class Allocation:
    """Result of allocate_buffers: concrete moves, or the index of the first failing action."""

    triples: list[RearrTriple] = field(default_factory=list)
    failed_index: int | None = None

    @property
    def ok(self) -> bool:
        return self.failed_index is None


def footprints_overlap(p: Point2, q: Point2, radius: float) -> bool:
    return p.distance_to(q) < 2.0 * radius - EPS


def buffer_count(plan: Sequence[AbstractAction]) -> int:
    return sum(1 for a in plan if a.target is AbstractTarget.TO_BUFFER)


def running_buffer(plan: Sequence[AbstractAction]) -> BufferBudget:
    """Peak number of objects parked in buffers while executing plan."""
    parked: set[ObjectId] = set()
    peak = 0
    for a in plan:
        if a.target is AbstractTarget.TO_BUFFER:
            parked.add(a.obj)
            peak = max(peak, len(parked))
        else:
            parked.discard(a.obj)
    return BufferBudget(peak)


# ---------------------------------------------------------------------------
# Running-buffer DP
# ---------------------------------------------------------------------------


def minimal_running_buffer_plan(
    current: Mapping[ObjectId, Point2],
    goal: Mapping[ObjectId, Point2],
    radius: float,
    tol: float = POSE_TOLERANCE,
    max_objects: int = MAX_DP_OBJECTS,
) -> AbstractPlan:
    """Abstract plan with the fewest simultaneously buffered objects.

    Ties are broken by the fewest "to buffer" actions, then by the smallest
    object id at every step. Objects already within tol of their goal get
    no action.

    Raises:
        ValueError: If more than max_objects objects need to move.
    """
    objs = sorted(k for k in current if k in goal and current[k].distance_to(goal[k]) > tol)
    n = len(objs)
    if n == 0:
        return ()
    if n > max_objects:
        raise ValueError(f"Running-buffer DP limited to {max_objects} objects, got {n}.")

    blockers = [0] * n
    for i, a in enumerate(objs):
        for j, b in enumerate(objs):
            if i != j and footprints_overlap(goal[a], current[b], radius):
                blockers[i] |= 1 << j

    size = 1 << n
    full = size - 1
    masks = np.arange(size, dtype=np.int64)
    popcount = np.zeros(size, dtype=np.int64)
    union = np.zeros(size, dtype=np.int64)
    for i in range(n):
        bit_set = (masks >> i) & 1
        popcount += bit_set
        union |= np.where(bit_set == 1, blockers[i], 0)
    # Objects parked in buffers once exactly the objects of mask are at goal.
    parked = union & ~masks

    # step[i][G]: objects in buffers once i's blockers are evicted (i itself
    # included while it still waits in a buffer); fresh[i][G]: new buffer moves.
    step = np.empty((n, size), dtype=np.int64)
    fresh = np.empty((n, size), dtype=np.int64)
    for i in range(n):
        step[i] = popcount[(parked | blockers[i]) & ~masks]
        fresh[i] = popcount[blockers[i] & ~masks & ~parked]

    levels = [masks[popcount == k] for k in range(n + 1)]
    unreachable = np.int64(size * (n + 1))

    # Minimal peak from every subset to the full set.
    peak = np.full(size, unreachable, dtype=np.int64)
    peak[full] = 0
    for k in range(n - 1, -1, -1):
        ms = levels[k]
        best = np.full(ms.shape, unreachable, dtype=np.int64)
        for i in range(n):
            free = ((ms >> i) & 1) == 0
            cand = np.maximum(step[i][ms], peak[ms | (1 << i)])
            best = np.where(free, np.minimum(best, cand), best)
        peak[ms] = best
    limit = peak[0]

    # Fewest buffer moves among schedules that never exceed the minimal peak.
    moves = np.full(size, unreachable, dtype=np.int64)
    moves[full] = 0
    for k in range(n - 1, -1, -1):
        ms = levels[k]
        best = np.full(ms.shape, unreachable, dtype=np.int64)
        for i in range(n):
            nxt = ms | (1 << i)
            ok = (((ms >> i) & 1) == 0) & (step[i][ms] <= limit) & (moves[nxt] < unreachable)
            best = np.where(ok, np.minimum(best, fresh[i][ms] + moves[nxt]), best)
        moves[ms] = best

    actions: list[AbstractAction] = []
    placed = 0
    while placed != full:
        for i in range(n):
            bit = 1 << i
            if placed & bit:
                continue
            nxt = placed | bit
            if (
                step[i][placed] <= limit
                and moves[nxt] < unreachable
                and fresh[i][placed] + moves[nxt] == moves[placed]
            ):
                break
        else:  # pragma: no cover - the DP guarantees a successor
            raise RuntimeError("Running-buffer DP reconstruction failed.")

        evict = blockers[i] & ~placed & ~int(parked[placed])
        for j in range(n):
            if evict >> j & 1:
                actions.append(AbstractAction(objs[j], AbstractTarget.TO_BUFFER))
        actions.append(AbstractAction(objs[i], AbstractTarget.TO_GOAL))
        placed = nxt

    logger.debug("Running-buffer plan: %d objects, peak %d, %d buffer moves.", n, int(limit), int(moves[0]))
    return tuple(actions)


def insert_explicit_evictions(
    plan: Sequence[AbstractAction],
    implicit_goals: Mapping[ObjectId, Point2],
    explicit_poses: Mapping[ObjectId, Point2],
    radius: float,
) -> AbstractPlan:
    """Buffer each explicit object right before the first "to goal" move it blocks."""
    evicted: set[ObjectId] = set()
    out: list[AbstractAction] = []
    for action in plan:
        if action.target is AbstractTarget.TO_GOAL and action.obj in implicit_goals:
            target = implicit_goals[action.obj]
            for e in sorted(explicit_poses):
                if e not in evicted and footprints_overlap(target, explicit_poses[e], radius):
                    out.append(AbstractAction(e, AbstractTarget.TO_BUFFER))
                    evicted.add(e)
        out.append(action)
    return tuple(out)


# ---------------------------------------------------------------------------
# Lazy buffer allocation
# ---------------------------------------------------------------------------


def allocate_buffers(
    plan: Sequence[AbstractAction],
    start: Arrangement,
    goal: Mapping[ObjectId, Point2],
    table: TableSpec,
    rng: np.random.Generator,
    reach_constraint: tuple[PerimeterCoord, float] | None = None,
    max_attempts: int = BUFFER_SAMPLE_ATTEMPTS,
    forbidden: Sequence[Point2] = (),
) -> Allocation:
    """Realize an abstract plan on the table.

    Buffer poses avoid every object footprint, the goal footprint of every
    object still waiting for its "to goal" move, and the extra forbidden
    footprints. With a reach constraint (s, rho) every pick, goal and
    buffer pose must also be within rho of s.
    """
    poses = list(start.poses)
    radius = start.radius
    pending = {a.obj for a in plan if a.target is AbstractTarget.TO_GOAL}
    triples: list[RearrTriple] = []

    def reachable(p: Point2) -> bool:
        return reach_constraint is None or within_reach(table, reach_constraint[0], p, reach_constraint[1])

    for i, action in enumerate(plan):
        k = action.obj
        if not reachable(poses[k]):
            return Allocation([], i)

        if action.target is AbstractTarget.TO_GOAL:
            target = goal[k]
            if not reachable(target) or not pose_valid(table, poses, target, radius, ignore=(k,)):
                logger.debug("Goal of object %d blocked at action %d.", k, i)
                return Allocation([], i)
            pending.discard(k)
        else:
            sampled = sample_free_pose(
                table,
                poses,
                radius,
                rng,
                forbidden_poses=[goal[j] for j in sorted(pending)] + list(forbidden),
                within=reach_constraint,
                ignore=(k,),
                max_attempts=max_attempts,
            )
            if sampled is None:
                logger.debug("No buffer for object %d at action %d.", k, i)
                return Allocation([], i)
            target = sampled

        triples.append(RearrTriple(k, poses[k], target))
        poses[k] = target

    return Allocation(triples, None)


def trlb_local_solve(
    start: Arrangement,
    goal: Arrangement,
    table: TableSpec,
    rng: np.random.Generator,
    retries: int = LOCAL_SOLVER_RETRIES,
    tol: float = POSE_TOLERANCE,
) -> list[RearrTriple] | None:
    """Feasible moves from start to goal, or None once every retry failed."""
    misplaced = misplaced_objects(start, goal, tol)
    if not misplaced:
        return []

    current = {k: start.pose(k) for k in misplaced}
    goals = {k: goal.pose(k) for k in misplaced}
    plan = minimal_running_buffer_plan(current, goals, start.radius, tol)

    for attempt in range(retries + 1):
        allocation = allocate_buffers(plan, start, goals, table, rng)
        if allocation.ok:
            return allocation.triples
        logger.debug("Buffer allocation attempt %d failed at action %d.", attempt + 1, allocation.failed_index)

    return None
