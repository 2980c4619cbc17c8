# =============================================================================
# Tabletop Rearrangement Planner - Manipulation Regions
# v1.0.0
# =============================================================================
# Where can the robot stand, and what can it do from there?
#
#   1. Picking regions: reach arcs of every misplaced object's current pose.
#      Placing regions: reach arcs of the same objects' goal poses.
#   2. Overlay: cut the perimeter circle at every arc endpoint; each cell is
#      labelled with the (object, operation) pairs whose arcs cover it.
#   3. Filter: an object is kept in a cell only if it can be picked there.
#      Empty cells are dropped.
#   4. Merge: adjacent cells with identical dictionaries are joined.
#   5. Reduce (optional): a region whose dictionary is a proper subset of a
#      surviving region's dictionary is ignored.
#
# Only region endpoints are useful standing locations; an endpoint whose
# shortest path from the robot runs through the region's other endpoint
# is dominated by it and skipped.
# =============================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Hashable, Iterable, Mapping, TypeVar

from app.world.domain import Arrangement, ObjectId, OpType, Scene, State, misplaced_objects
from app.world.geometry import (
    EPS,
    PerimeterCoord,
    PerimeterInterval,
    TableSpec,
    nearest_perimeter_coord,
    path_passes_through,
    perimeter_length,
    reach_intervals,
)

logger = logging.getLogger(__name__)

Label = TypeVar("Label", bound=Hashable)
ObjectOpDict = dict[ObjectId, frozenset[OpType]]


@dataclass(frozen=True)
class ManipRegion:
    interval: PerimeterInterval
    caps: frozenset[tuple[ObjectId, OpType]]

    @property
    def op_dict(self) -> ObjectOpDict:
        ops: dict[ObjectId, set[OpType]] = {}
        for k, op in self.caps:
            ops.setdefault(k, set()).add(op)
        return {k: frozenset(v) for k, v in sorted(ops.items())}


@dataclass(frozen=True)
class StandingCandidate:
    location: PerimeterCoord
    region: ManipRegion


# ---------------------------------------------------------------------------
# Picking and placing regions
# ---------------------------------------------------------------------------


def _regions_for(poses: Arrangement, objects: Iterable[ObjectId], scene: Scene) -> dict[ObjectId, list[PerimeterInterval]]:
    out: dict[ObjectId, list[PerimeterInterval]] = {}
    for k in objects:
        intervals = reach_intervals(scene.table, poses.pose(k), scene.rho)
        if intervals:
            out[k] = intervals
    return out


def picking_regions(state: State, goal: Arrangement, scene: Scene) -> dict[ObjectId, list[PerimeterInterval]]:
    """Where the robot can stand to pick each misplaced object."""
    return _regions_for(state.arrangement, misplaced_objects(state.arrangement, goal, scene.tol), scene)


def placing_regions(goal: Arrangement, scene: Scene, state: State) -> dict[ObjectId, list[PerimeterInterval]]:
    """Where the robot can stand to place each misplaced object at its goal."""
    return _regions_for(goal, misplaced_objects(state.arrangement, goal, scene.tol), scene)


# ---------------------------------------------------------------------------
# Overlay, filter, merge
# ---------------------------------------------------------------------------


def overlay_cells(
    labelled: Mapping[Label, Iterable[PerimeterInterval]],
    perimeter: float,
) -> list[tuple[PerimeterInterval, frozenset[Label]]]:
    """Partition the perimeter at every interval endpoint and label each cell.

    Cells covered by no interval are returned with an empty label set.
    """
    labelled = {label: list(ivs) for label, ivs in labelled.items()}
    raw = sorted(
        s % perimeter
        for ivs in labelled.values()
        for iv in ivs
        if not iv.is_full(perimeter)
        for s in iv.endpoints(perimeter)
    )
    cuts: list[float] = []
    for s in raw:
        if not cuts or s - cuts[-1] > EPS:
            cuts.append(s)
    if len(cuts) > 1 and cuts[0] + perimeter - cuts[-1] <= EPS:
        cuts.pop()

    if not cuts:
        labels = frozenset(label for label, ivs in labelled.items() if any(iv.is_full(perimeter) for iv in ivs))
        return [(PerimeterInterval(0.0, perimeter), labels)] if labels else []

    cells: list[tuple[PerimeterInterval, frozenset[Label]]] = []
    for idx, lo in enumerate(cuts):
        hi = cuts[idx + 1] if idx + 1 < len(cuts) else cuts[0] + perimeter
        length = hi - lo
        if length <= EPS:
            continue
        mid = (lo + length / 2.0) % perimeter
        labels = frozenset(
            label for label, ivs in labelled.items() if any(iv.contains(mid, perimeter, tol=0.0) for iv in ivs)
        )
        cells.append((PerimeterInterval(lo, length), labels))
    return cells


def merge_cells(
    cells: list[tuple[PerimeterInterval, frozenset[Label]]],
    perimeter: float,
) -> list[tuple[PerimeterInterval, frozenset[Label]]]:
    """Join touching cells that carry identical labels, across the wrap too."""
    merged: list[tuple[PerimeterInterval, frozenset[Label]]] = []
    for iv, labels in sorted(cells, key=lambda c: c[0].start):
        if merged:
            prev, prev_labels = merged[-1]
            if prev_labels == labels and abs(prev.start + prev.length - iv.start) <= EPS:
                merged[-1] = (PerimeterInterval(prev.start, prev.length + iv.length), labels)
                continue
        merged.append((iv, labels))

    if len(merged) > 1:
        first, first_labels = merged[0]
        last, last_labels = merged[-1]
        if first_labels == last_labels and abs(last.start + last.length - (first.start + perimeter)) <= EPS:
            merged[-1] = (PerimeterInterval(last.start, last.length + first.length), last_labels)
            merged.pop(0)
    return merged


def manipulation_regions(state: State, goal: Arrangement, scene: Scene) -> list[ManipRegion]:
    """Perimeter arcs with a constant set of pick and place capabilities.

    Args:
        state: Current robot position and object poses.
        goal: Goal arrangement.
        scene: Table, reach and pose tolerance.

    Returns:
        Regions in perimeter order. Place entries survive only next to a pick
        of the same object; arcs with nothing to pick are dropped.
    """
    perimeter = scene.perimeter
    labelled: dict[tuple[ObjectId, OpType], list[PerimeterInterval]] = {}
    for k, ivs in picking_regions(state, goal, scene).items():
        labelled[(k, OpType.PICK)] = ivs
    for k, ivs in placing_regions(goal, scene, state).items():
        labelled[(k, OpType.PLACE)] = ivs

    filtered: list[tuple[PerimeterInterval, frozenset[tuple[ObjectId, OpType]]]] = []
    for iv, labels in overlay_cells(labelled, perimeter):
        pickable = {k for k, op in labels if op is OpType.PICK}
        caps = frozenset((k, op) for k, op in labels if k in pickable)
        if caps:
            filtered.append((iv, caps))

    regions = [ManipRegion(iv, caps) for iv, caps in merge_cells(filtered, perimeter)]
    logger.debug("%d manipulation regions from %d labelled arcs.", len(regions), len(labelled))
    return regions


def reduce_regions(regions: list[ManipRegion]) -> list[ManipRegion]:
    """Drop every region whose dictionary is a proper subset of a surviving one."""
    survivors: list[ManipRegion] = []
    for region in sorted(regions, key=lambda r: (-len(r.caps), r.interval.start)):
        if any(region.caps < other.caps for other in survivors):
            continue
        survivors.append(region)
    return survivors


# ---------------------------------------------------------------------------
# Standing locations
# ---------------------------------------------------------------------------


def efficient_endpoints(
    table: TableSpec, robot: PerimeterCoord, interval: PerimeterInterval
) -> list[PerimeterCoord]:
    """Interval endpoints not dominated by the other endpoint on the robot's shortest path."""
    perimeter = perimeter_length(table)
    e1, e2 = interval.endpoints(perimeter)
    kept = []
    if not path_passes_through(table, robot, e1, e2):
        kept.append(e1)
    if not path_passes_through(table, robot, e2, e1):
        kept.append(e2)
    return kept


def efficient_standing_locations(state: State, regions: list[ManipRegion], table: TableSpec) -> list[StandingCandidate]:
    """Where the robot may stand to work in each region.

    Args:
        state: Supplies the robot position.
        regions: Regions to visit, usually after reduce_regions.
        table: Table the perimeter belongs to.

    Returns:
        One candidate per non-dominated endpoint, plus the robot position
        when it already lies inside the region.
    """
    perimeter = perimeter_length(table)
    robot = state.robot
    out: list[StandingCandidate] = []
    for region in regions:
        iv = region.interval
        if iv.is_full(perimeter):
            out.append(StandingCandidate(robot, region))
            continue
        locations = efficient_endpoints(table, robot, iv)
        if iv.contains(robot, perimeter) and all(abs(robot - s) > EPS for s in locations):
            locations.append(robot)
        out.extend(StandingCandidate(s, region) for s in locations)
    return out


def placing_points(
    table: TableSpec, rho: float, standing: PerimeterCoord, target_intervals: list[PerimeterInterval], fallback
) -> list[PerimeterCoord]:
    """Standing points for placing a carried object, robot currently at standing.

    Args:
        table: Table dimensions.
        rho: Reach radius.
        standing: Where the object was picked.
        target_intervals: Reach intervals of the place pose.
        fallback: Place pose, used when no interval yields a point.

    Returns:
        Distinct non-dominated endpoints, or the boundary point nearest
        the place pose.
    """
    points: list[PerimeterCoord] = []
    for iv in target_intervals:
        for s in efficient_endpoints(table, standing, iv):
            if all(abs(s - q) > EPS for q in points):
                points.append(s)
    if not points:
        points.append(nearest_perimeter_coord(table, fallback))
    return points
