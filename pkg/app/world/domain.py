# =============================================================================
# Tabletop Rearrangement Planner - Domain Types
# v1.0.0
# =============================================================================
# Arrangements, states, pick/place operations and plans, plus the two
# functions everything else leans on:
#
#   simulate()       replays an operation sequence and rejects the first
#                    infeasible operation (hand state, reach, collisions).
#   sequence_cost()  walks the sequence charging MC per operation and the
#                    around-the-table travel cost at every change of
#                    standing location. This one rule reproduces the cost
#                    of both the single and the multiple relocation
#                    strategies.
#
# The robot holds at most one object; a held object takes no part in
# collision checks until it is placed.
# =============================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from enum import Enum
from functools import cached_property
from typing import Any, Iterable, NamedTuple, Sequence

import numpy as np

from app.config import POSE_TOLERANCE
from app.world.geometry import (
    PerimeterCoord,
    Point2,
    ReachSpec,
    TableSpec,
    in_bounds,
    nearest_perimeter_coord,
    perimeter_length,
    pose_valid,
    travel_cost,
    within_reach,
)

logger = logging.getLogger(__name__)

ObjectId = int


# ---------------------------------------------------------------------------
# Errors
# ---------------------------------------------------------------------------


class InvalidArrangement(ValueError):
    """An arrangement with overlapping or out-of-bounds objects."""


class SimulationError(Exception):
    """An operation sequence that cannot be executed.

    Attributes:
        index: Position of the offending operation in the sequence.
    """

    def __init__(self, index: int, message: str) -> None:
        super().__init__(f"operation {index}: {message}")
        self.index = index


class HandOccupied(SimulationError):
    pass


class HandEmpty(SimulationError):
    pass


class WrongObjectHeld(SimulationError):
    pass


class ObjectNotAtPose(SimulationError):
    pass


class OutOfReach(SimulationError):
    pass


class CollisionAtPlace(SimulationError):
    pass


class OutOfBounds(SimulationError):
    pass


# ---------------------------------------------------------------------------
# Value types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Scene:
    """Static part of a problem: the table, the robot's reach and the pose tolerance."""

    table: TableSpec
    reach: ReachSpec
    tol: float = POSE_TOLERANCE

    @property
    def rho(self) -> float:
        return self.reach.rho

    @property
    def perimeter(self) -> float:
        return perimeter_length(self.table)


@dataclass(frozen=True)
class Arrangement:
    poses: tuple[Point2, ...]
    radius: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "poses", tuple(Point2(float(x), float(y)) for x, y in self.poses))

    @property
    def n(self) -> int:
        return len(self.poses)

    @cached_property
    def array(self) -> np.ndarray:
        arr = np.array(self.poses, dtype=float).reshape(-1, 2)
        arr.flags.writeable = False
        return arr

    def pose(self, k: ObjectId) -> Point2:
        return self.poses[k]

    def moved(self, k: ObjectId, p: Point2) -> Arrangement:
        poses = list(self.poses)
        poses[k] = p
        return Arrangement(tuple(poses), self.radius)

    def validate(self, table: TableSpec) -> None:
        """Raise InvalidArrangement naming the first bad object."""
        for k, p in enumerate(self.poses):
            if not in_bounds(table, p, self.radius):
                raise InvalidArrangement(f"object {k} at {tuple(p)} is out of bounds")
            if not pose_valid(table, self.poses, p, self.radius, ignore=(k,)):
                raise InvalidArrangement(f"object {k} at {tuple(p)} overlaps another object")

    def is_valid(self, table: TableSpec) -> bool:
        try:
            self.validate(table)
        except InvalidArrangement:
            return False
        return True


@dataclass(frozen=True)
class State:
    """Robot standing location plus the full arrangement; the hand is always empty."""

    robot: PerimeterCoord
    arrangement: Arrangement


class OpType(str, Enum):
    PICK = "pick"
    PLACE = "place"


@dataclass(frozen=True)
class Operation:
    op_type: OpType
    obj: ObjectId
    pose: Point2
    standing: PerimeterCoord

    @classmethod
    def pick(cls, obj: ObjectId, pose: Point2, standing: PerimeterCoord) -> Operation:
        return cls(OpType.PICK, obj, Point2(*pose), float(standing))

    @classmethod
    def place(cls, obj: ObjectId, pose: Point2, standing: PerimeterCoord) -> Operation:
        return cls(OpType.PLACE, obj, Point2(*pose), float(standing))

    @property
    def is_pick(self) -> bool:
        return self.op_type is OpType.PICK

    def at(self, standing: PerimeterCoord) -> Operation:
        """The same operation performed from another standing location."""
        return Operation(self.op_type, self.obj, self.pose, float(standing))

    def to_dict(self) -> dict[str, Any]:
        return {
            "type": self.op_type.value,
            "object": self.obj,
            "pose": [self.pose.x, self.pose.y],
            "standing": self.standing,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Operation:
        return cls(
            OpType(data["type"]),
            int(data["object"]),
            Point2(float(data["pose"][0]), float(data["pose"][1])),
            float(data["standing"]),
        )


OperationSequence = tuple[Operation, ...]


@dataclass(frozen=True)
class CostModel:
    mc: float
    table: TableSpec

    def __post_init__(self) -> None:
        if self.mc < 0:
            raise ValueError(f"Manipulation cost must be >= 0, got {self.mc}.")


class RearrTriple(NamedTuple):
    """One object move of a local solver plan: (object, pick pose, place pose)."""

    obj: ObjectId
    pick_pose: Point2
    place_pose: Point2


@dataclass
class Plan:
    sequence: OperationSequence
    total_cost: float
    meta: dict[str, Any] = field(default_factory=dict)

    @classmethod
    def from_sequence(
        cls, sequence: Sequence[Operation], start_robot: PerimeterCoord, cm: CostModel
    ) -> Plan:
        seq = tuple(sequence)
        return cls(seq, sequence_cost(seq, start_robot, cm))

    def to_dict(self) -> dict[str, Any]:
        return {
            "total_cost": self.total_cost,
            "operations": [op.to_dict() for op in self.sequence],
            **({"meta": self.meta} if self.meta else {}),
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Plan:
        return cls(
            tuple(Operation.from_dict(op) for op in data["operations"]),
            float(data["total_cost"]),
            dict(data.get("meta", {})),
        )


# ---------------------------------------------------------------------------
# Simulation and cost
# ---------------------------------------------------------------------------


def simulate(start: State, seq: Iterable[Operation], scene: Scene) -> State:
    """Replay seq from start and return the resulting state.

    Raises:
        SimulationError: The subclass names the violated constraint and
            carries the index of the first infeasible operation.
    """
    table = scene.table
    perimeter = scene.perimeter
    radius = start.arrangement.radius
    n = start.arrangement.n
    poses = list(start.arrangement.poses)
    held: ObjectId | None = None
    robot = start.robot
    count = 0

    for i, op in enumerate(seq):
        count = i + 1
        if not 0 <= op.obj < n:
            raise ObjectNotAtPose(i, f"unknown object {op.obj}")

        if op.op_type is OpType.PICK:
            if held is not None:
                raise HandOccupied(i, f"cannot pick {op.obj} while holding {held}")
            if poses[op.obj].distance_to(op.pose) > scene.tol:
                raise ObjectNotAtPose(i, f"object {op.obj} is at {tuple(poses[op.obj])}, not {tuple(op.pose)}")
        else:
            if held is None:
                raise HandEmpty(i, f"cannot place {op.obj} with an empty hand")
            if held != op.obj:
                raise WrongObjectHeld(i, f"holding {held}, asked to place {op.obj}")
            if not in_bounds(table, op.pose, radius):
                raise OutOfBounds(i, f"pose {tuple(op.pose)} leaves the table")
            if not pose_valid(table, poses, op.pose, radius, ignore=(op.obj,)):
                raise CollisionAtPlace(i, f"pose {tuple(op.pose)} overlaps another object")

        if not 0.0 <= op.standing < perimeter or not within_reach(table, op.standing, op.pose, scene.rho):
            raise OutOfReach(i, f"pose {tuple(op.pose)} unreachable from standing location {op.standing}")

        if op.op_type is OpType.PICK:
            held = op.obj
        else:
            poses[op.obj] = op.pose
            held = None
        robot = op.standing

    if held is not None:
        raise HandOccupied(count, f"sequence ends while holding object {held}")

    return State(robot, Arrangement(tuple(poses), radius))


def sequence_cost(seq: Iterable[Operation], start_robot: PerimeterCoord, cm: CostModel) -> float:
    """MC per operation plus travel at every change of standing location."""
    total = 0.0
    prev = start_robot
    for op in seq:
        total += cm.mc
        if op.standing != prev:
            total += travel_cost(cm.table, prev, op.standing)
            prev = op.standing
    return total


def displacement(arrangement: Arrangement, goal: Arrangement) -> np.ndarray:
    return np.hypot(*(arrangement.array - goal.array).T)


def misplaced_objects(arrangement: Arrangement, goal: Arrangement, tol: float = POSE_TOLERANCE) -> list[ObjectId]:
    return [int(k) for k in np.flatnonzero(displacement(arrangement, goal) > tol)]


def is_goal(state: State, goal: Arrangement, tol: float = POSE_TOLERANCE) -> bool:
    if state.arrangement.n != goal.n:
        raise ValueError("State and goal hold different object counts.")
    return bool(np.all(displacement(state.arrangement, goal) <= tol))


def misplaced_count(state: State, goal: Arrangement, tol: float = POSE_TOLERANCE) -> int:
    if state.arrangement.n != goal.n:
        raise ValueError("State and goal hold different object counts.")
    return int(np.count_nonzero(displacement(state.arrangement, goal) > tol))


def single_relocation(table: TableSpec, obj: ObjectId, pick_pose: Point2, place_pose: Point2) -> OperationSequence:
    """Pick from the closest boundary point to pick_pose, place from the closest to place_pose."""
    return (
        Operation.pick(obj, pick_pose, nearest_perimeter_coord(table, pick_pose)),
        Operation.place(obj, place_pose, nearest_perimeter_coord(table, place_pose)),
    )


def triples_to_single_ops(table: TableSpec, triples: Iterable[RearrTriple]) -> OperationSequence:
    ops: list[Operation] = []
    for t in triples:
        ops.extend(single_relocation(table, t.obj, t.pick_pose, t.place_pose))
    return tuple(ops)
