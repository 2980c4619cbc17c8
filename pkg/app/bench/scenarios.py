# =============================================================================
# Tabletop Rearrangement Planner - Scenarios
# v1.0.0
# =============================================================================
# A scenario is one planning instance: table, disk radius, manipulation
# range, robot start and the start/goal arrangements. gen() rejection
# samples both arrangements from a seeded numpy Generator, so the same
# seed always yields the same scenario.
# =============================================================================

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Any

import numpy as np

from app.config import GEN_MAX_ATTEMPTS, OBJECT_RADIUS, POSE_TOLERANCE, TABLE_HEIGHT, TABLE_WIDTH
from app.world.domain import Arrangement, InvalidArrangement, Scene, State, misplaced_count
from app.world.geometry import Point2, ReachSpec, TableSpec, reach_intervals, sample_free_pose

logger = logging.getLogger(__name__)

_BATCH = 256


class DensityTooHigh(ValueError):
    """The requested object count does not fit on the table."""


@dataclass(frozen=True)
class Scenario:
    table: TableSpec
    radius: float
    rho: float
    robot_start: float
    start: Arrangement
    goal: Arrangement
    seed: int

    @property
    def n(self) -> int:
        return self.start.n

    @property
    def scene(self) -> Scene:
        return Scene(self.table, ReachSpec(self.rho), POSE_TOLERANCE)

    @property
    def start_state(self) -> State:
        return State(self.robot_start, self.start)

    def validate(self) -> None:
        """Raise InvalidArrangement if the scenario breaks an instance rule."""
        if self.start.n != self.goal.n:
            raise InvalidArrangement("start and goal hold different object counts")
        self.start.validate(self.table)
        self.goal.validate(self.table)
        if misplaced_count(self.start_state, self.goal, POSE_TOLERANCE) != self.n:
            raise InvalidArrangement("some object starts at its goal pose")

    def to_dict(self) -> dict[str, Any]:
        return {
            "table": {"width": self.table.width, "height": self.table.height},
            "radius": self.radius,
            "rho": self.rho,
            "robot_start": self.robot_start,
            "start": [[p.x, p.y] for p in self.start.poses],
            "goal": [[p.x, p.y] for p in self.goal.poses],
            "seed": self.seed,
        }

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Scenario:
        """Build a scenario from its JSON form.

        Raises:
            ValueError: On missing or malformed fields.
        """
        try:
            table = TableSpec(float(data["table"]["width"]), float(data["table"]["height"]))
            radius = float(data["radius"])
            rho = float(data.get("rho", ReachSpec.default_for(table).rho))
            return cls(
                table=table,
                radius=radius,
                rho=rho,
                robot_start=float(data.get("robot_start", 0.0)),
                start=Arrangement(tuple(Point2(*p) for p in data["start"]), radius),
                goal=Arrangement(tuple(Point2(*p) for p in data["goal"]), radius),
                seed=int(data.get("seed", 0)),
            )
        except (KeyError, TypeError) as exc:
            raise ValueError(f"Malformed scenario: {exc!r}") from exc


def _sample_arrangement(
    n: int,
    table: TableSpec,
    radius: float,
    rho: float,
    rng: np.random.Generator,
    budget: list[int],
    avoid: Arrangement | None = None,
) -> Arrangement:
    poses: list[Point2] = []
    while len(poses) < n:
        if budget[0] <= 0:
            raise DensityTooHigh(f"Could not place {n} objects of radius {radius} after {GEN_MAX_ATTEMPTS} attempts.")
        batch = min(_BATCH, budget[0])
        budget[0] -= batch
        pose = sample_free_pose(table, poses, radius, rng, max_attempts=batch)
        if pose is None:
            continue
        if not reach_intervals(table, pose, rho):
            continue
        if avoid is not None and pose.distance_to(avoid.pose(len(poses))) <= POSE_TOLERANCE:
            continue
        poses.append(pose)
    return Arrangement(tuple(poses), radius)


def gen(
    n: int,
    table: TableSpec | None = None,
    radius: float = OBJECT_RADIUS,
    seed: int = 0,
    rho: float | None = None,
    max_attempts: int = GEN_MAX_ATTEMPTS,
) -> Scenario:
    """Random valid scenario with every object away from its goal.

    Raises:
        DensityTooHigh: If the disks cannot fit, or sampling runs out of attempts.
    """
    if n < 1:
        raise ValueError(f"Need at least one object, got {n}.")
    table = table or TableSpec(TABLE_WIDTH, TABLE_HEIGHT)
    if n * (2.0 * radius) ** 2 > table.width * table.height:
        raise DensityTooHigh(f"{n} disks of radius {radius} exceed the {table.width} x {table.height} table area.")
    if 2.0 * radius > min(table.width, table.height):
        raise DensityTooHigh(f"Disk radius {radius} does not fit on the table.")

    reach = ReachSpec(rho) if rho is not None else ReachSpec.default_for(table)
    rng = np.random.default_rng(seed)
    budget = [max_attempts]
    start = _sample_arrangement(n, table, radius, reach.rho, rng, budget)
    goal = _sample_arrangement(n, table, radius, reach.rho, rng, budget, avoid=start)

    scenario = Scenario(table, radius, reach.rho, 0.0, start, goal, seed)
    scenario.validate()
    logger.debug("Generated scenario: n=%d seed=%d (%d attempts left).", n, seed, budget[0])
    return scenario
