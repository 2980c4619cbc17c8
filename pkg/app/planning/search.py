# =============================================================================
# Tabletop Rearrangement Planner - Anytime A* Search
# v1.0.0
# =============================================================================
# Search tree over states, expanded with either action strategy.
#
#   1. Select: pop min f = g + h from the open list. Once a plan exists, a
#      closed node is picked uniformly at random instead with probability
#      re_explore_prob and expanded again with fresh buffer samples.
#   2. Closed check: if the popped state is already closed with a higher g,
#      the closed node is rewritten under the cheaper parent and the
#      expansion is skipped. A closed state with lower g just drops the pop.
#   3. Expand: successors go into the open list. With shorten_on_expand a
#      successor may be attached to the grandparent when a shortened edge
#      is cheaper.
#   4. Goal attempt: the explored state is completed greedily and the
#      concatenated plan is offered to the best-plan record.
#
# Stops at timeout, at max_iterations, or when the open list runs dry.
# =============================================================================

from __future__ import annotations

import heapq
import itertools
import logging
import time
from dataclasses import dataclass, field
from typing import Any, Iterator

import numpy as np

from app.config import (
    KEY_QUANTUM,
    LOCAL_SOLVER_RETRIES,
    PLANNER_TIMEOUT,
    RE_EXPLORE_PROB,
    REARRANGE_SEED,
)
from app.planning.anytime import BestPlanTracker, PlanResult, check_instance
from app.planning.expand import ActionStrategy, ExpansionParams, expand_state
from app.planning.goal_attempt import goal_attempt
from app.planning.shorten import achievable
from app.world.domain import (
    Arrangement,
    CostModel,
    OperationSequence,
    Scene,
    SimulationError,
    State,
    is_goal,
    misplaced_count,
    sequence_cost,
    simulate,
)
from app.world.geometry import EPS

logger = logging.getLogger(__name__)

StateKey = tuple[Any, ...]


# ---------------------------------------------------------------------------
# Configuration
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PlannerConfig:
    strategy: ActionStrategy = ActionStrategy.MULTIPLE
    re_explore_prob: float = RE_EXPLORE_PROB
    goal_attempt: bool = True
    region_reduction: bool = True
    buffer_samples: int | None = None
    timeout: float = PLANNER_TIMEOUT
    seed: int = REARRANGE_SEED
    arrangement_only_keys: bool = False
    shorten_on_expand: bool = True
    max_iterations: int | None = None
    local_solver_retries: int = LOCAL_SOLVER_RETRIES
    key_quantum: float = KEY_QUANTUM
    name: str = "strap2"

    def __post_init__(self) -> None:
        if not 0.0 <= self.re_explore_prob <= 1.0:
            raise ValueError(f"re_explore_prob must be within [0, 1], got {self.re_explore_prob}.")
        if self.timeout <= 0:
            raise ValueError(f"timeout must be > 0, got {self.timeout}.")
        if self.buffer_samples is not None and self.buffer_samples < 1:
            raise ValueError(f"buffer_samples must be >= 1, got {self.buffer_samples}.")

    @property
    def expansion(self) -> ExpansionParams:
        return ExpansionParams(self.strategy, self.buffer_samples, self.region_reduction)

    @classmethod
    def preset(cls, name: str, **overrides: Any) -> PlannerConfig:
        """Planner configuration by name; None-valued overrides are ignored."""
        if name not in PRESETS:
            raise ValueError(f"Unknown planner {name!r}; choose from {', '.join(PRESETS)}.")
        fields = {**PRESETS[name], **{k: v for k, v in overrides.items() if v is not None}}
        if name == "orla" and ActionStrategy(fields.get("strategy", ActionStrategy.SINGLE)) is not ActionStrategy.SINGLE:
            raise ValueError("The orla planner supports the single strategy only.")
        if "strategy" in fields:
            fields["strategy"] = ActionStrategy(fields["strategy"])
        return cls(name=name, **fields)


PRESETS: dict[str, dict[str, Any]] = {
    "strap2": {},
    "strap": {"re_explore_prob": 0.0},
    "orla": {
        "strategy": ActionStrategy.SINGLE,
        "re_explore_prob": 0.0,
        "goal_attempt": False,
        "arrangement_only_keys": True,
        "shorten_on_expand": False,
    },
    "trlb": {"strategy": ActionStrategy.SINGLE},
    "mcts": {"strategy": ActionStrategy.SINGLE},
}


# ---------------------------------------------------------------------------
# Tree
# ---------------------------------------------------------------------------


def make_key(state: State, quantum: float = KEY_QUANTUM, arrangement_only: bool = False) -> StateKey:
    """Hashable duplicate-detection key; poses and robot are snapped to a grid of size quantum."""
    poses = tuple(np.round(state.arrangement.array / quantum).astype(np.int64).ravel().tolist())
    if arrangement_only:
        return (None, poses)
    return (int(round(state.robot / quantum)), poses)


def heuristic(state: State, goal: Arrangement, cm: CostModel, tol: float) -> float:
    """Every misplaced object needs one pick and one place; travel is bounded by zero."""
    return 2.0 * cm.mc * misplaced_count(state, goal, tol)


_ids = itertools.count()


@dataclass(eq=False)
class SearchNode:
    state: State
    g: float
    h: float
    parent: SearchNode | None = None
    edge_seq: OperationSequence = ()
    children: set[SearchNode] = field(default_factory=set)
    closed: bool = False
    dead: bool = False
    node_id: int = field(default_factory=lambda: next(_ids))

    @property
    def f(self) -> float:
        return self.g + self.h

    def ordered_children(self) -> list[SearchNode]:
        return sorted(self.children, key=lambda c: c.node_id)

    def path(self) -> Iterator[SearchNode]:
        node: SearchNode | None = self
        while node is not None:
            yield node
            node = node.parent

    def path_sequence(self) -> OperationSequence:
        edges = [n.edge_seq for n in self.path()]
        return tuple(op for edge in reversed(edges) for op in edge)

    def detach(self) -> None:
        if self.parent is not None:
            self.parent.children.discard(self)


class OpenList:
    """Binary heap on (f, h, insertion order) with lazy deletion of stale entries."""

    def __init__(self) -> None:
        self._heap: list[tuple[float, float, int, float, SearchNode]] = []
        self._counter = itertools.count()

    def push(self, node: SearchNode) -> None:
        heapq.heappush(self._heap, (node.f, node.h, next(self._counter), node.g, node))

    def pop(self) -> SearchNode | None:
        while self._heap:
            _, _, _, g, node = heapq.heappop(self._heap)
            if node.closed or node.dead or abs(g - node.g) > EPS:
                continue
            return node
        return None

    def __len__(self) -> int:
        return len(self._heap)


def select_next(
    open_list: OpenList,
    closed: list[SearchNode],
    rng: np.random.Generator,
    config: PlannerConfig,
    solution_found: bool,
) -> tuple[SearchNode | None, bool]:
    """Next node to explore and whether it is a closed-node re-exploration.

    Args:
        open_list: Frontier ordered by f, then h.
        closed: Closed nodes in closing order; dead ones are never re-explored.
        rng: Source for the re-exploration draw.
        config: Supplies re_explore_prob.
        solution_found: Re-exploration only starts once a plan exists.

    Returns:
        (node, reexplored). node is None when the open list is empty.
    """
    if solution_found and closed and config.re_explore_prob > 0.0 and rng.random() < config.re_explore_prob:
        node = closed[int(rng.integers(len(closed)))]
        if not node.dead:
            return node, True
    return open_list.pop(), False


# ---------------------------------------------------------------------------
# Planner
# ---------------------------------------------------------------------------


class AnytimePlanner:
    def __init__(self, start: State, goal: Arrangement, scene: Scene, config: PlannerConfig, cm: CostModel) -> None:
        check_instance(start, goal, scene)
        self.start = start
        self.goal = goal
        self.scene = scene
        self.config = config
        self.cm = cm
        self.rng = np.random.default_rng(config.seed)
        self.open = OpenList()
        self.closed: dict[StateKey, SearchNode] = {}
        self.closed_nodes: list[SearchNode] = []
        self.best_g: dict[StateKey, float] = {}
        self.root = SearchNode(start, 0.0, self._h(start))
        self.tracker = BestPlanTracker(start, goal, scene, cm, label=config.name)
        self.iterations = 0
        self.expansions = 0
        self.rewrites = 0

    def _h(self, state: State) -> float:
        return heuristic(state, self.goal, self.cm, self.scene.tol)

    def _key(self, state: State) -> StateKey:
        return make_key(state, self.config.key_quantum, self.config.arrangement_only_keys)

    def _edge_cost(self, parent: SearchNode, edge: OperationSequence) -> float:
        return sequence_cost(edge, parent.state.robot, self.cm)

    def plan(self) -> PlanResult:
        cfg = self.config
        logger.info(
            "%s: %d objects, strategy=%s, timeout=%.1f s, seed=%d.",
            cfg.name,
            self.goal.n,
            cfg.strategy.value,
            cfg.timeout,
            cfg.seed,
        )
        deadline = time.perf_counter() + cfg.timeout
        self.open.push(self.root)
        self.best_g[self._key(self.start)] = 0.0

        while time.perf_counter() < deadline:
            if cfg.max_iterations is not None and self.iterations >= cfg.max_iterations:
                break
            node, reexplored = select_next(self.open, self.closed_nodes, self.rng, cfg, self.tracker.found)
            if node is None:
                logger.info("%s: open list exhausted.", cfg.name)
                break
            self.iterations += 1

            if not reexplored:
                key = self._key(node.state)
                existing = self.closed.get(key)
                if existing is not None:
                    if node.parent is not None and node.g < existing.g - EPS:
                        self.rewrite(node.parent, existing, node.edge_seq, node.state)
                    node.detach()
                    node.dead = True
                    continue
                node.closed = True
                self.closed[key] = node
                self.closed_nodes.append(node)

            if is_goal(node.state, self.goal, self.scene.tol):
                self.tracker.offer(node.path_sequence())
                continue

            self._expand(node)

            if cfg.goal_attempt:
                completion = goal_attempt(
                    node.state, self.goal, self.scene, cfg.strategy, self.rng, retries=cfg.local_solver_retries
                )
                if completion is not None:
                    self.tracker.offer(node.path_sequence() + completion)

        logger.info(
            "%s stopped: %d iterations, %d expansions, %d rewrites, best cost %.4f.",
            cfg.name,
            self.iterations,
            self.expansions,
            self.rewrites,
            self.tracker.best_cost,
        )
        return self.tracker.result(
            planner=cfg.name,
            strategy=cfg.strategy.value,
            iterations=self.iterations,
            expansions=self.expansions,
            rewrites=self.rewrites,
        )

    def _expand(self, node: SearchNode) -> None:
        self.expansions += 1
        successors = expand_state(node.state, self.goal, self.scene, self.rng, self.config.expansion)
        for succ in successors:
            parent, edge = node, succ.sequence
            if self.config.shorten_on_expand and node.parent is not None:
                shorter = achievable(self.config.strategy, node.edge_seq, edge, node.parent.state, self.scene, self.cm)
                if shorter is not None:
                    parent, edge = node.parent, shorter

            g = parent.g + self._edge_cost(parent, edge)
            key = self._key(succ.state)
            if self.best_g.get(key, float("inf")) <= g + EPS:
                continue
            self.best_g[key] = g

            child = SearchNode(succ.state, g, self._h(succ.state), parent, edge)
            parent.children.add(child)
            self.open.push(child)
            if child.h == 0.0 and is_goal(child.state, self.goal, self.scene.tol):
                self.tracker.offer(child.path_sequence())

        logger.debug("Expanded node %d: %d successors, open=%d.", node.node_id, len(successors), len(self.open))

    # ------------------------------------------------------------------
    # Rewrite
    # ------------------------------------------------------------------

    def rewrite(
        self,
        parent: SearchNode,
        explored: SearchNode,
        edge_seq: OperationSequence,
        state: State | None = None,
    ) -> bool:
        """Re-parent explored under parent and reconnect its children where possible.

        Args:
            parent: New parent node.
            explored: Closed node reached again more cheaply.
            edge_seq: Operations from parent to explored.
            state: State edge_seq ends in; replayed when omitted.

        Returns:
            False when the new path is not cheaper or would close a cycle.
        """
        if parent is explored or self._is_ancestor(explored, parent):
            return False
        new_g = parent.g + self._edge_cost(parent, edge_seq)
        if new_g >= explored.g - EPS:
            return False

        explored.detach()
        explored.parent = parent
        explored.edge_seq = edge_seq
        explored.state = state if state is not None else simulate(parent.state, edge_seq, self.scene)
        parent.children.add(explored)
        self.rewrites += 1
        self._update_subtree(explored, new_g)
        logger.debug("Rewrote node %d under %d: g=%.4f.", explored.node_id, parent.node_id, new_g)

        for child in explored.ordered_children():
            shorter = achievable(self.config.strategy, explored.edge_seq, child.edge_seq, parent.state, self.scene, self.cm)
            if shorter is None:
                continue
            try:
                child_state = simulate(parent.state, shorter, self.scene)
            except SimulationError:
                continue
            child.detach()
            child.parent = parent
            child.edge_seq = shorter
            child.state = child_state
            parent.children.add(child)
            self._update_subtree(child, parent.g + self._edge_cost(parent, shorter))
        return True

    def _update_subtree(self, node: SearchNode, g: float) -> None:
        stack = [(node, g)]
        while stack:
            current, current_g = stack.pop()
            current.g = current_g
            self.best_g[self._key(current.state)] = min(self.best_g.get(self._key(current.state), float("inf")), current_g)
            if not current.closed:
                self.open.push(current)
            for child in current.ordered_children():
                try:
                    child_state = simulate(current.state, child.edge_seq, self.scene)
                except SimulationError:
                    # The edge no longer applies from the rewritten state.
                    self._prune(child)
                    continue
                child.state = child_state
                stack.append((child, current_g + self._edge_cost(current, child.edge_seq)))

    def _prune(self, node: SearchNode) -> None:
        node.detach()
        stack = [node]
        while stack:
            current = stack.pop()
            current.dead = True
            key = self._key(current.state)
            if self.closed.get(key) is current:
                del self.closed[key]
            self.best_g.pop(key, None)
            stack.extend(current.children)
        logger.debug("Pruned subtree at node %d.", node.node_id)

    @staticmethod
    def _is_ancestor(candidate: SearchNode, node: SearchNode) -> bool:
        return any(n is candidate for n in node.path())

    # Audit helpers for tests.

    def nodes(self) -> Iterator[SearchNode]:
        stack = [self.root]
        while stack:
            node = stack.pop()
            yield node
            stack.extend(node.ordered_children())


def plan(
    start: State,
    goal: Arrangement,
    scene: Scene,
    config: PlannerConfig,
    cm: CostModel,
) -> PlanResult:
    """Run the anytime planner until timeout and return the best plan with its log.

    Args:
        start: Initial robot position and arrangement.
        goal: Goal arrangement.
        scene: Table, reach and pose tolerance.
        config: Planner settings, usually from PlannerConfig.preset.
        cm: Cost model.

    Returns:
        The best plan and one event per improvement.

    Raises:
        InvalidInstance: If the instance is malformed or already solved.
        NoSolutionWithinTimeout: If no plan was found before stopping.
    """
    return AnytimePlanner(start, goal, scene, config, cm).plan()

