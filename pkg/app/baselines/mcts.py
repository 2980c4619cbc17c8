# =============================================================================
# Tabletop Rearrangement Planner - MCTS Baseline
# v1.0.0
# =============================================================================
# Anytime UCT search over the same successor generators as the A* planner.
#
#   select    descend fully expanded nodes by UCB1 (c = sqrt(2))
#   expand    draw one untried successor of the configured strategy
#   rollout   complete the state with single-strategy goal attempting
#   backup    reward = C / (C + total cost), C = 2 * MC * n
#
# Every rollout that reaches the goal is offered to the best-plan record.
# =============================================================================

from __future__ import annotations

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np

from app.planning.anytime import BestPlanTracker, PlanResult, check_instance
from app.planning.expand import ActionStrategy, Successor, expand_state
from app.planning.goal_attempt import goal_attempt
from app.planning.search import PlannerConfig
from app.world.domain import Arrangement, CostModel, OperationSequence, Scene, State, is_goal, sequence_cost

logger = logging.getLogger(__name__)

EXPLORATION = math.sqrt(2.0)


@dataclass(eq=False)
class MctsNode:
    state: State
    parent: MctsNode | None = None
    edge_seq: OperationSequence = ()
    visits: int = 0
    total_reward: float = 0.0
    children: dict[int, MctsNode] = field(default_factory=dict)
    untried: list[Successor] | None = None

    @property
    def expanded(self) -> bool:
        return self.untried is not None and not self.untried

    def ucb(self, child: MctsNode) -> float:
        if child.visits == 0:
            return math.inf
        mean = child.total_reward / child.visits
        return mean + EXPLORATION * math.sqrt(math.log(self.visits) / child.visits)

    def path_sequence(self) -> OperationSequence:
        edges = []
        node: MctsNode | None = self
        while node is not None:
            edges.append(node.edge_seq)
            node = node.parent
        return tuple(op for edge in reversed(edges) for op in edge)


def reward(total_cost: float, reference: float) -> float:
    """Bounded cost-ratio reward: 1 for a free completion, towards 0 as cost grows."""
    return reference / (reference + total_cost)


def reference_cost(cm: CostModel, n: int) -> float:
    ref = 2.0 * cm.mc * n
    return ref if ref > 0.0 else cm.table.perimeter


def mcts_plan(
    start: State,
    goal: Arrangement,
    scene: Scene,
    config: PlannerConfig,
    cm: CostModel,
) -> PlanResult:
    check_instance(start, goal, scene)
    rng = np.random.default_rng(config.seed)
    tracker = BestPlanTracker(start, goal, scene, cm, label="mcts")
    ref = reference_cost(cm, goal.n)
    root = MctsNode(start)
    deadline = time.perf_counter() + config.timeout
    iterations = 0

    logger.info("mcts: %d objects, strategy=%s, timeout=%.1f s.", goal.n, config.strategy.value, config.timeout)

    while time.perf_counter() < deadline:
        if config.max_iterations is not None and iterations >= config.max_iterations:
            break
        iterations += 1

        # Selection
        node = root
        while node.expanded and node.children:
            node = max(node.children.values(), key=node.ucb)

        # Expansion
        if not is_goal(node.state, goal, scene.tol):
            if node.untried is None:
                successors = expand_state(node.state, goal, scene, rng, config.expansion)
                order = rng.permutation(len(successors))
                node.untried = [successors[i] for i in order]
            if node.untried:
                succ = node.untried.pop()
                child = MctsNode(succ.state, node, succ.sequence)
                node.children[len(node.children)] = child
                node = child

        # Rollout
        prefix = node.path_sequence()
        completion = goal_attempt(node.state, goal, scene, ActionStrategy.SINGLE, rng, retries=config.local_solver_retries)
        if completion is None:
            value = 0.0
        else:
            full = prefix + completion
            tracker.offer(full)
            value = reward(sequence_cost(full, start.robot, cm), ref)

        # Backup
        while node is not None:
            node.visits += 1
            node.total_reward += value
            node = node.parent

        if root.expanded and not root.children:
            logger.info("mcts: root has no successors.")
            break

    logger.info("mcts stopped: %d iterations, best cost %.4f.", iterations, tracker.best_cost)
    return tracker.result(planner="mcts", strategy=config.strategy.value, iterations=iterations, reward="cost_ratio")
