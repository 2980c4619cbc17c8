import math

import pytest

from app.planning.regions import (
    ManipRegion,
    efficient_standing_locations,
    manipulation_regions,
    merge_cells,
    overlay_cells,
    picking_regions,
    placing_regions,
    reduce_regions,
)
from app.world.domain import OpType, State
from app.world.geometry import PerimeterInterval

from tests.conftest import arrangement

PICK, PLACE = OpType.PICK, OpType.PLACE
HALF = math.sqrt(0.25 - 0.04)  # chord half-width for an object 0.2 m from an edge, reach 0.5


def region(start, length, *caps):
    return ManipRegion(PerimeterInterval(start, length), frozenset(caps))


class TestPickPlaceRegions:
    def test_objects_at_goal_are_excluded(self, scene):
        state = State(0.0, arrangement((0.5, 0.2), (1.5, 0.2)))
        goal = arrangement((0.5, 0.2), (1.5, 0.8))
        assert set(picking_regions(state, goal, scene)) == {1}
        assert set(placing_regions(goal, scene, state)) == {1}

    def test_center_object_has_no_region(self, scene):
        state = State(0.0, arrangement((1.0, 0.5)))
        goal = arrangement((0.5, 0.2))
        assert picking_regions(state, goal, scene) == {}


class TestOverlayAndMerge:
    def test_overlay_labels_every_cell(self):
        cells = overlay_cells({"a": [PerimeterInterval(1.0, 2.0)], "b": [PerimeterInterval(2.0, 2.0)]}, 6.0)
        labels = [(round(iv.start, 9), round(iv.length, 9), lab) for iv, lab in cells]
        assert labels == [
            (1.0, 1.0, frozenset("a")),
            (2.0, 1.0, frozenset("ab")),
            (3.0, 1.0, frozenset("b")),
            (4.0, 3.0, frozenset()),
        ]

    def test_merge_joins_equal_neighbours_across_zero(self):
        a, b = frozenset("a"), frozenset("b")
        cells = [
            (PerimeterInterval(0.0, 1.0), a),
            (PerimeterInterval(1.0, 4.5), b),
            (PerimeterInterval(5.5, 0.5), a),
        ]
        merged = merge_cells(cells, 6.0)
        assert len(merged) == 2
        assert merged[0] == (PerimeterInterval(1.0, 4.5), b)
        assert merged[1][1] == a
        assert merged[1][0].start == pytest.approx(5.5)
        assert merged[1][0].length == pytest.approx(1.5)


class TestManipulationRegions:
    def test_pick_only_object(self, scene):
        state = State(0.0, arrangement((0.5, 0.2)))
        goal = arrangement((1.5, 0.8))
        (only,) = manipulation_regions(state, goal, scene)
        assert only.op_dict == {0: frozenset({PICK})}
        assert only.interval.start == pytest.approx(0.5 - HALF)
        assert only.interval.length == pytest.approx(2.0 * HALF)

    def test_overlapping_pick_and_place(self, scene):
        state = State(0.0, arrangement((0.5, 0.2)))
        goal = arrangement((0.9, 0.2))
        regions = manipulation_regions(state, goal, scene)
        # The place-only flank is filtered out.
        assert [r.op_dict for r in regions] == [{0: frozenset({PICK})}, {0: frozenset({PICK, PLACE})}]
        assert regions[1].interval.start == pytest.approx(0.9 - HALF)
        assert regions[1].interval.end(6.0) == pytest.approx(0.5 + HALF)

    def test_regions_are_disjoint_and_pickable(self, scene):
        from app.bench.scenarios import gen

        for seed in range(10):
            scenario = gen(5, scene.table, 0.05, seed)
            regions = manipulation_regions(scenario.start_state, scenario.goal, scene)
            ordered = sorted(regions, key=lambda r: r.interval.start)
            for prev, nxt in zip(ordered, ordered[1:]):
                assert prev.interval.start + prev.interval.length <= nxt.interval.start + 1e-9
            for r in regions:
                assert all(PICK in ops for ops in r.op_dict.values())


class TestReduceRegions:
    def test_subset_region_is_dropped(self):
        r1 = region(0.0, 1.0, (0, PICK))
        r2 = region(1.0, 1.0, (0, PICK), (1, PICK))
        r3 = region(2.0, 1.0, (0, PICK), (2, PICK))
        assert reduce_regions([r1, r2, r3]) == [r2, r3]

    def test_incomparable_regions_survive(self):
        r1 = region(0.0, 1.0, (0, PICK))
        r2 = region(1.0, 1.0, (1, PICK))
        assert set(reduce_regions([r1, r2])) == {r1, r2}

    def test_chain_keeps_the_largest(self):
        a = region(0.0, 1.0, (0, PICK))
        b = region(1.0, 1.0, (0, PICK), (1, PICK))
        c = region(2.0, 1.0, (0, PICK), (1, PICK), (1, PLACE))
        assert reduce_regions([a, b, c]) == [c]

    def test_no_capability_is_lost(self, scene):
        from app.bench.scenarios import gen

        for seed in range(10):
            scenario = gen(6, scene.table, 0.05, seed)
            regions = manipulation_regions(scenario.start_state, scenario.goal, scene)
            before = set().union(*(r.caps for r in regions))
            after = set().union(*(r.caps for r in reduce_regions(regions)))
            assert before == after


class TestStandingLocations:
    @pytest.fixture
    def r(self):
        return region(1.0, 1.0, (0, PICK))

    def _locations(self, robot, r, table):
        state = State(robot, arrangement((0.5, 0.2)))
        return sorted(c.location for c in efficient_standing_locations(state, [r], table))

    def test_far_endpoint_behind_near_one_is_dropped(self, r, table):
        assert self._locations(0.0, r, table) == [1.0]
        assert self._locations(3.5, r, table) == [2.0]

    def test_robot_inside_region_is_a_candidate(self, r, table):
        assert self._locations(1.5, r, table) == [1.0, 1.5, 2.0]

    def test_full_region_uses_the_robot_location(self, table):
        full = region(0.0, 6.0, (0, PICK))
        assert self._locations(4.2, full, table) == [4.2]
