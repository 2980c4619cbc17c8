# =============================================================================
# Tabletop Rearrangement Planner - Anytime Bookkeeping
# v1.0.0
# =============================================================================
# Shared by every planner: instance checks, planner errors, the best-plan
# record and its improvement log. A candidate plan is only accepted after
# it has been re-simulated to the goal and re-costed from scratch, so the
# reported cost always matches the returned operations.
# =============================================================================

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import NamedTuple, Sequence

from app.world.domain import (
    Arrangement,
    CostModel,
    InvalidArrangement,
    Operation,
    Plan,
    Scene,
    SimulationError,
    State,
    is_goal,
    misplaced_count,
    sequence_cost,
    simulate,
)

logger = logging.getLogger(__name__)


class InvalidInstance(ValueError):
    """A start/goal pair the planners do not accept."""


class NoSolutionWithinTimeout(RuntimeError):
    """The planner stopped before finding any complete plan."""


class SolverFailure(RuntimeError):
    """A non-anytime solver gave up after its retries."""


class AnytimeEvent(NamedTuple):
    elapsed: float
    best_cost: float


@dataclass
class PlanResult:
    plan: Plan
    events: list[AnytimeEvent] = field(default_factory=list)


def check_instance(start: State, goal: Arrangement, scene: Scene) -> None:
    """Reject malformed instances before any search starts.

    Raises:
        InvalidInstance: On mismatched object counts, invalid arrangements,
            a robot off the perimeter or an object starting at its goal.
    """
    if start.arrangement.n != goal.n:
        raise InvalidInstance(f"Start holds {start.arrangement.n} objects, goal holds {goal.n}.")
    if not 0.0 <= start.robot < scene.perimeter:
        raise InvalidInstance(f"Robot coordinate {start.robot} is off the perimeter.")
    try:
        start.arrangement.validate(scene.table)
        goal.validate(scene.table)
    except InvalidArrangement as exc:
        raise InvalidInstance(str(exc)) from exc
    if misplaced_count(start, goal, scene.tol) != goal.n:
        raise InvalidInstance("Every object must start away from its goal pose.")


class BestPlanTracker:
    """Best complete plan found so far, with a timestamped improvement log."""

    def __init__(self, start: State, goal: Arrangement, scene: Scene, cm: CostModel, label: str = "") -> None:
        self.start = start
        self.goal = goal
        self.scene = scene
        self.cm = cm
        self.label = label
        self.started_at = time.perf_counter()
        self.best: Plan | None = None
        self.events: list[AnytimeEvent] = []

    @property
    def found(self) -> bool:
        return self.best is not None

    @property
    def best_cost(self) -> float:
        return self.best.total_cost if self.best is not None else float("inf")

    def elapsed(self) -> float:
        return time.perf_counter() - self.started_at

    def offer(self, sequence: Sequence[Operation]) -> bool:
        """Record sequence if it is a valid plan cheaper than the current best."""
        seq = tuple(sequence)
        cost = sequence_cost(seq, self.start.robot, self.cm)
        if cost >= self.best_cost:
            return False
        try:
            end = simulate(self.start, seq, self.scene)
        except SimulationError as exc:
            logger.warning("Rejected candidate plan: %s", exc)
            return False
        if not is_goal(end, self.goal, self.scene.tol):
            logger.warning("Rejected candidate plan: it does not reach the goal.")
            return False

        self.best = Plan(seq, cost)
        event = AnytimeEvent(self.elapsed(), cost)
        self.events.append(event)
        logger.info("%s improved: cost %.4f at %.3f s (%d operations).", self.label or "planner", cost, event.elapsed, len(seq))
        return True

    def result(self, **meta) -> PlanResult:
        if self.best is None:
            raise NoSolutionWithinTimeout(f"{self.label or 'planner'} found no plan in {self.elapsed():.2f} s.")
        self.best.meta.update(meta)
        return PlanResult(self.best, list(self.events))
