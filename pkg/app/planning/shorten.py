# =============================================================================
# Tabletop Rearrangement Planner - Sequence Shortening
# v1.0.0
# =============================================================================
# Given two consecutive edges A (parent -> current) and B (current -> child)
# find a cheaper single edge parent -> child.
#
#   switch-and-cancel  A places object k and B later picks k from the same
#                      pose. The pick-and-place pairs in between are moved
#                      before the pick of k, after the place of k, or split
#                      around the carry (A's pairs before, B's after) so the
#                      redundant place/pick pair can be removed and k is
#                      carried straight through. The cheapest survivor wins.
#   merging            The operations on both sides of the junction that
#                      share a standing location are re-homed to one
#                      location reachable for all of them, saving a leg.
#
# A candidate is accepted only if it replays from the parent state to the
# same end state as A + B and costs strictly less. Feasibility is always
# checked by full re-simulation.
# =============================================================================

from __future__ import annotations

import logging
from typing import Iterator, Sequence

from app.planning.expand import ActionStrategy
from app.planning.regions import overlay_cells
from app.world.domain import (
    CostModel,
    Operation,
    OperationSequence,
    Scene,
    SimulationError,
    State,
    sequence_cost,
    simulate,
    single_relocation,
)
from app.world.geometry import EPS, reach_intervals

logger = logging.getLogger(__name__)


def same_state(a: State, b: State, tol: float) -> bool:
    if abs(a.robot - b.robot) > EPS or a.arrangement.n != b.arrangement.n:
        return False
    return all(p.distance_to(q) <= tol for p, q in zip(a.arrangement.poses, b.arrangement.poses))


def _accept(
    candidate: OperationSequence,
    parent: State,
    target: State,
    budget: float,
    scene: Scene,
    cm: CostModel,
) -> bool:
    if not candidate or sequence_cost(candidate, parent.robot, cm) >= budget - EPS:
        return False
    try:
        end = simulate(parent, candidate, scene)
    except SimulationError:
        return False
    return same_state(end, target, scene.tol)


# ---------------------------------------------------------------------------
# Switch-and-cancel
# ---------------------------------------------------------------------------


def _cancel_candidates(seq_a: OperationSequence, seq_b: OperationSequence) -> Iterator[OperationSequence]:
    """Sequences with one redundant place(k)/pick(k) pair removed across the junction."""
    for i in range(len(seq_a) - 1, 0, -1):
        place = seq_a[i]
        grab = seq_a[i - 1]
        if place.is_pick or not grab.is_pick or grab.obj != place.obj:
            continue
        k = place.obj
        # The object must rest untouched from the end of A until B picks it.
        if any(op.obj == k for op in seq_a[i + 1 :]):
            continue
        for j, op in enumerate(seq_b):
            if op.obj != k:
                continue
            if not op.is_pick or op.pose != place.pose or j + 1 >= len(seq_b):
                break
            carry = seq_b[j + 1]
            mid_a, mid_b = seq_a[i + 1 :], seq_b[:j]
            tail = seq_b[j + 2 :]
            head = seq_a[: i - 1]
            # Pairs in between run before k is picked,
            yield head + mid_a + mid_b + (grab, carry) + tail
            # after k reaches its new pose,
            yield head + (grab, carry) + mid_a + mid_b + tail
            # or k is carried across the junction: A's pairs stay at A's
            # location before the grab, B's pairs follow the carry.
            yield head + mid_a + (grab, carry) + mid_b + tail
            break


# ---------------------------------------------------------------------------
# Operation merging
# ---------------------------------------------------------------------------


def _junction_block(seq_a: OperationSequence, seq_b: OperationSequence) -> tuple[int, int]:
    """Index range [lo, hi) of the combined sequence around the A/B junction."""
    combined = seq_a + seq_b
    lo = len(seq_a)
    if seq_a:
        last = seq_a[-1].standing
        while lo > 0 and combined[lo - 1].standing == last:
            lo -= 1
    hi = len(seq_a)
    if seq_b:
        first = seq_b[0].standing
        while hi < len(combined) and combined[hi].standing == first:
            hi += 1
    return lo, hi


def _common_standing_points(ops: Sequence[Operation], scene: Scene) -> list[float]:
    labelled = {i: reach_intervals(scene.table, op.pose, scene.rho) for i, op in enumerate(ops)}
    if any(not ivs for ivs in labelled.values()):
        return []
    points: list[float] = []
    for cell, labels in overlay_cells(labelled, scene.perimeter):
        if len(labels) == len(ops):
            for s in cell.endpoints(scene.perimeter):
                if all(abs(s - q) > EPS for q in points):
                    points.append(s)
    return points


def _merge_candidates(seq_a: OperationSequence, seq_b: OperationSequence, scene: Scene) -> Iterator[OperationSequence]:
    combined = seq_a + seq_b
    lo, hi = _junction_block(seq_a, seq_b)
    if hi - lo < 2:
        return
    block = combined[lo:hi]
    homes = [block[0].standing, block[-1].standing] + _common_standing_points(block, scene)
    seen: list[float] = []
    for s in homes:
        if any(abs(s - q) <= EPS for q in seen):
            continue
        seen.append(s)
        yield combined[:lo] + tuple(op.at(s) for op in block) + combined[hi:]


# ---------------------------------------------------------------------------
# Public entry points
# ---------------------------------------------------------------------------


def shorten(
    seq_a: OperationSequence,
    seq_b: OperationSequence,
    parent: State,
    scene: Scene,
    cm: CostModel,
) -> OperationSequence | None:
    """A strictly cheaper sequence with the same effect as seq_a + seq_b, or None."""
    naive = tuple(seq_a) + tuple(seq_b)
    try:
        target = simulate(parent, naive, scene)
    except SimulationError:
        return None
    budget = sequence_cost(naive, parent.robot, cm)

    cancelled = [
        c for c in _cancel_candidates(tuple(seq_a), tuple(seq_b)) if _accept(c, parent, target, budget, scene, cm)
    ]
    if cancelled:
        best = min(cancelled, key=lambda c: sequence_cost(c, parent.robot, cm))
        logger.debug("Switch-and-cancel: %d -> %d operations.", len(naive), len(best))
        return best

    for candidate in _merge_candidates(tuple(seq_a), tuple(seq_b), scene):
        if _accept(candidate, parent, target, budget, scene, cm):
            logger.debug("Operation merging saved %.4f.", budget - sequence_cost(candidate, parent.robot, cm))
            return candidate

    return None


def merge_single_relocations(
    seq_a: OperationSequence,
    seq_b: OperationSequence,
    parent: State,
    scene: Scene,
    cm: CostModel,
) -> OperationSequence | None:
    """One direct relocation replacing two relocations of the same object."""
    if len(seq_a) != 2 or len(seq_b) != 2 or seq_a[-1].obj != seq_b[0].obj:
        return None
    k = seq_a[0].obj
    pick_pose, place_pose = seq_a[0].pose, seq_b[-1].pose
    if pick_pose.distance_to(place_pose) <= scene.tol:
        return None
    naive = tuple(seq_a) + tuple(seq_b)
    try:
        target = simulate(parent, naive, scene)
    except SimulationError:
        return None
    candidate = single_relocation(scene.table, k, pick_pose, place_pose)
    if _accept(candidate, parent, target, sequence_cost(naive, parent.robot, cm), scene, cm):
        return candidate
    return None


def achievable(
    strategy: ActionStrategy,
    seq_a: OperationSequence,
    seq_b: OperationSequence,
    parent: State,
    scene: Scene,
    cm: CostModel,
) -> OperationSequence | None:
    """Direct parent -> child edge cheaper than going through the middle node."""
    if strategy is ActionStrategy.SINGLE:
        return merge_single_relocations(seq_a, seq_b, parent, scene, cm)
    return shorten(seq_a, seq_b, parent, scene, cm)
