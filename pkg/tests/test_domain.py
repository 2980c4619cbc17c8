import numpy as np
import pytest

from app.baselines.trlb import trlb_plan
from app.bench.scenarios import gen
from app.world.domain import (
    Arrangement,
    CollisionAtPlace,
    CostModel,
    HandEmpty,
    HandOccupied,
    InvalidArrangement,
    ObjectNotAtPose,
    Operation,
    OutOfBounds,
    OutOfReach,
    Plan,
    State,
    WrongObjectHeld,
    is_goal,
    misplaced_count,
    misplaced_objects,
    sequence_cost,
    simulate,
    single_relocation,
)
from app.world.geometry import Point2, nearest_perimeter_coord, travel_cost

from tests.conftest import arrangement


@pytest.fixture
def two_objects() -> State:
    return State(0.0, arrangement((0.5, 0.2), (1.5, 0.2)))


class TestArrangement:
    def test_overlap_is_invalid(self, table):
        with pytest.raises(InvalidArrangement, match="overlaps"):
            arrangement((0.5, 0.5), (0.55, 0.5)).validate(table)

    def test_out_of_bounds_is_invalid(self, table):
        assert not arrangement((0.02, 0.5)).is_valid(table)

    def test_moved_leaves_the_original_untouched(self):
        arr = arrangement((0.5, 0.2), (1.5, 0.2))
        moved = arr.moved(0, Point2(0.7, 0.7))
        assert arr.pose(0) == Point2(0.5, 0.2)
        assert moved.pose(0) == Point2(0.7, 0.7)
        assert moved.pose(1) == arr.pose(1)

    def test_misplaced_objects(self):
        arr = arrangement((0.5, 0.2), (1.5, 0.2))
        goal = arrangement((0.5, 0.2), (1.0, 0.8))
        assert misplaced_objects(arr, goal) == [1]
        assert misplaced_count(State(0.0, arr), goal) == 1
        assert not is_goal(State(0.0, arr), goal)
        assert is_goal(State(3.0, goal), goal)

    def test_goal_check_needs_matching_counts(self):
        with pytest.raises(ValueError):
            is_goal(State(0.0, arrangement((0.5, 0.2))), arrangement((0.5, 0.2), (1.0, 0.8)))


class TestSimulate:
    def test_single_relocation_reaches_its_target(self, scene, two_objects):
        seq = single_relocation(scene.table, 0, Point2(0.5, 0.2), Point2(0.5, 0.8))
        end = simulate(two_objects, seq, scene)
        assert end.arrangement.pose(0) == Point2(0.5, 0.8)
        assert end.robot == pytest.approx(4.5)

    def test_place_with_empty_hand(self, scene, two_objects):
        seq = (Operation.place(0, Point2(0.5, 0.8), 4.5),)
        with pytest.raises(HandEmpty) as exc:
            simulate(two_objects, seq, scene)
        assert exc.value.index == 0

    def test_pick_while_holding(self, scene, two_objects):
        seq = (Operation.pick(0, Point2(0.5, 0.2), 0.5), Operation.pick(1, Point2(1.5, 0.2), 1.5))
        with pytest.raises(HandOccupied) as exc:
            simulate(two_objects, seq, scene)
        assert exc.value.index == 1

    def test_sequence_must_end_with_an_empty_hand(self, scene, two_objects):
        with pytest.raises(HandOccupied) as exc:
            simulate(two_objects, (Operation.pick(0, Point2(0.5, 0.2), 0.5),), scene)
        assert exc.value.index == 1

    def test_wrong_object_placed(self, scene, two_objects):
        seq = (Operation.pick(0, Point2(0.5, 0.2), 0.5), Operation.place(1, Point2(0.5, 0.8), 4.5))
        with pytest.raises(WrongObjectHeld):
            simulate(two_objects, seq, scene)

    def test_pick_from_stale_pose(self, scene, two_objects):
        with pytest.raises(ObjectNotAtPose):
            simulate(two_objects, (Operation.pick(0, Point2(0.6, 0.2), 0.5),), scene)

    def test_pick_out_of_reach(self, scene, two_objects):
        with pytest.raises(OutOfReach) as exc:
            simulate(two_objects, (Operation.pick(0, Point2(0.5, 0.2), 3.0),), scene)
        assert exc.value.index == 0

    def test_place_into_another_object(self, scene, two_objects):
        seq = (Operation.pick(0, Point2(0.5, 0.2), 0.5), Operation.place(0, Point2(1.5, 0.25), 1.5))
        with pytest.raises(CollisionAtPlace) as exc:
            simulate(two_objects, seq, scene)
        assert exc.value.index == 1

    def test_place_off_the_table(self, scene, two_objects):
        seq = (Operation.pick(0, Point2(0.5, 0.2), 0.5), Operation.place(0, Point2(0.01, 0.5), 5.5))
        with pytest.raises(OutOfBounds):
            simulate(two_objects, seq, scene)

    def test_held_object_does_not_collide_with_its_own_place(self, scene, two_objects):
        seq = (Operation.pick(0, Point2(0.5, 0.2), 0.5), Operation.place(0, Point2(0.52, 0.2), 0.5))
        end = simulate(two_objects, seq, scene)
        assert end.arrangement.pose(0) == Point2(0.52, 0.2)

    def test_replaying_in_pieces_matches_replaying_at_once(self, scene, cm):
        for seed in range(5):
            scenario = gen(4, scene.table, 0.05, seed)
            start = scenario.start_state
            seq = trlb_plan(start, scenario.goal, scene, cm, np.random.default_rng(seed)).sequence
            whole = simulate(start, seq, scene)
            for cut in range(2, len(seq), 2):
                assert simulate(simulate(start, seq[:cut], scene), seq[cut:], scene) == whole


class TestCost:
    def test_single_relocation_cost(self, table, cm):
        seq = single_relocation(table, 0, Point2(0.5, 0.2), Point2(0.5, 0.8))
        # MC per operation, 0 -> 0.5 along the bottom, 0.5 -> 4.5 clockwise via s = 0.
        assert sequence_cost(seq, 0.0, cm) == pytest.approx(2.0 + 0.5 + 2.0)

    def test_grouped_operations_pay_travel_once(self, table, cm):
        ops = (
            Operation.pick(0, Point2(0.5, 0.2), 1.0),
            Operation.place(0, Point2(0.6, 0.3), 1.0),
            Operation.pick(1, Point2(1.2, 0.2), 1.0),
            Operation.place(1, Point2(1.1, 0.3), 1.0),
        )
        assert sequence_cost(ops, 5.0, cm) == pytest.approx(4.0 + 2.0)

    def test_zero_manipulation_cost_leaves_travel(self, table):
        seq = single_relocation(table, 0, Point2(0.5, 0.2), Point2(1.5, 0.2))
        assert sequence_cost(seq, 0.0, CostModel(0.0, table)) == pytest.approx(1.5)

    def test_negative_manipulation_cost_rejected(self, table):
        with pytest.raises(ValueError):
            CostModel(-1.0, table)

    def test_single_strategy_closed_form(self, table):
        rng = np.random.default_rng(11)
        mc = 2.5
        cm = CostModel(mc, table)
        for _ in range(100):
            m = int(rng.integers(1, 6))
            pts = [Point2(*p) for p in rng.uniform([0.05, 0.05], [1.95, 0.95], size=(2 * m, 2))]
            start = float(rng.uniform(0.0, 6.0))
            seq = tuple(op for i in range(m) for op in single_relocation(table, i, pts[2 * i], pts[2 * i + 1]))
            stands = [start] + [nearest_perimeter_coord(table, p) for p in pts]
            expected = 2.0 * mc * m + sum(travel_cost(table, a, b) for a, b in zip(stands, stands[1:]))
            assert sequence_cost(seq, start, cm) == pytest.approx(expected)


class TestPlanFormat:
    def test_plan_dict_round_trip(self, table, cm):
        seq = single_relocation(table, 0, Point2(0.5, 0.2), Point2(1.5, 0.2))
        plan = Plan.from_sequence(seq, 0.0, cm)
        plan.meta["planner"] = "trlb"
        data = plan.to_dict()
        assert data["operations"][0] == {"type": "pick", "object": 0, "pose": [0.5, 0.2], "standing": 0.5}
        again = Plan.from_dict(data)
        assert again.sequence == plan.sequence
        assert again.total_cost == plan.total_cost
        assert again.meta == {"planner": "trlb"}

    def test_arrangement_coerces_plain_tuples(self):
        arr = Arrangement(((0.5, 0.2),), 0.05)
        assert isinstance(arr.pose(0), Point2)
        assert arr.array.shape == (1, 2)
