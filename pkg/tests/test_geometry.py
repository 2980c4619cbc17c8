import math

import numpy as np
import pytest

from app.world.geometry import (
    GeometryError,
    PerimeterInterval,
    Point2,
    ReachSpec,
    TableSpec,
    coord_to_point,
    nearest_perimeter_coord,
    path_passes_through,
    pose_valid,
    reach_intervals,
    sample_free_pose,
    travel_cost,
    within_reach,
)


class TestPerimeter:
    @pytest.mark.parametrize(
        "s, expected",
        [
            (0.0, (0.0, 0.0)),
            (0.5, (0.5, 0.0)),
            (2.5, (2.0, 0.5)),
            (3.5, (1.5, 1.0)),
            (5.5, (0.0, 0.5)),
        ],
    )
    def test_coord_to_point_walks_counter_clockwise(self, table, s, expected):
        assert coord_to_point(table, s) == pytest.approx(expected)

    def test_coord_outside_range_rejected(self, table):
        with pytest.raises(GeometryError):
            coord_to_point(table, 6.0)
        with pytest.raises(GeometryError):
            coord_to_point(table, -0.1)

    def test_table_dimensions_must_be_positive(self):
        with pytest.raises(GeometryError):
            TableSpec(0.0, 1.0)

    def test_travel_cost_takes_the_shorter_way_round(self, table):
        assert travel_cost(table, 0.5, 5.5) == pytest.approx(1.0)
        assert travel_cost(table, 1.0, 2.5) == pytest.approx(1.5)
        assert travel_cost(table, 2.0, 2.0) == 0.0

    def test_travel_cost_is_symmetric(self, table):
        rng = np.random.default_rng(0)
        for a, b in rng.uniform(0.0, 6.0, size=(50, 2)):
            assert travel_cost(table, a, b) == pytest.approx(travel_cost(table, b, a))
            assert travel_cost(table, a, b) <= 3.0 + 1e-12

    def test_path_passes_through(self, table):
        assert path_passes_through(table, 0.0, 2.0, 1.0)
        assert not path_passes_through(table, 0.0, 2.0, 3.0)
        # The short way from 1 to 5 runs clockwise across s = 0.
        assert path_passes_through(table, 1.0, 5.0, 0.2)
        assert not path_passes_through(table, 1.0, 5.0, 3.0)

    def test_nearest_perimeter_coord(self, table):
        assert nearest_perimeter_coord(table, Point2(1.0, 0.2)) == pytest.approx(1.0)
        assert nearest_perimeter_coord(table, Point2(1.9, 0.5)) == pytest.approx(2.5)
        assert nearest_perimeter_coord(table, Point2(0.5, 0.8)) == pytest.approx(4.5)

    def test_nearest_perimeter_coord_beats_dense_sampling(self, table):
        rng = np.random.default_rng(4)
        boundary = [coord_to_point(table, s) for s in np.linspace(0.0, 6.0, 1000, endpoint=False)]
        for x, y in rng.uniform([0.0, 0.0], [2.0, 1.0], size=(50, 2)):
            p = Point2(x, y)
            found = coord_to_point(table, nearest_perimeter_coord(table, p)).distance_to(p)
            assert found <= min(q.distance_to(p) for q in boundary) + 1e-9


class TestReach:
    def test_default_reach_is_half_the_short_side(self, table):
        assert ReachSpec.default_for(table).rho == pytest.approx(0.5)

    def test_object_near_bottom_edge_gives_one_bottom_interval(self, table):
        (iv,) = reach_intervals(table, Point2(1.0, 0.2), 0.5)
        half = math.sqrt(0.25 - 0.04)
        assert iv.start == pytest.approx(1.0 - half)
        assert iv.length == pytest.approx(2.0 * half)

    def test_corner_object_interval_wraps_across_zero(self, table):
        (iv,) = reach_intervals(table, Point2(0.1, 0.1), 0.5)
        half = math.sqrt(0.25 - 0.01)
        assert iv.start == pytest.approx(5.0 + 0.9 - half)
        assert iv.length == pytest.approx(2.0 * (0.1 + half))
        assert iv.contains(0.0, 6.0)
        assert iv.contains(0.3, 6.0)
        assert not iv.contains(3.0, 6.0)

    def test_center_object_only_touches_the_long_sides(self, table):
        assert reach_intervals(table, Point2(1.0, 0.5), 0.5) == []

    def test_large_reach_covers_everything(self, table):
        (iv,) = reach_intervals(table, Point2(1.0, 0.5), 5.0)
        assert iv.is_full(6.0)

    def test_interval_points_are_within_reach(self, table):
        rng = np.random.default_rng(1)
        for x, y in rng.uniform([0.05, 0.05], [1.95, 0.95], size=(30, 2)):
            p = Point2(x, y)
            for iv in reach_intervals(table, p, 0.5):
                for frac in (0.0, 0.25, 0.5, 0.75, 1.0):
                    s = (iv.start + frac * iv.length) % 6.0
                    assert within_reach(table, s, p, 0.5)

    def test_boundary_outside_the_intervals_is_out_of_reach(self, table):
        rng = np.random.default_rng(2)
        coords = rng.uniform(0.0, 6.0, size=400)
        for x, y in rng.uniform([0.05, 0.05], [1.95, 0.95], size=(30, 2)):
            p = Point2(x, y)
            intervals = reach_intervals(table, p, 0.5)
            for s in coords:
                if any(iv.contains(s, 6.0, tol=1e-6) for iv in intervals):
                    continue
                assert coord_to_point(table, s).distance_to(p) > 0.5 - 1e-6

    def test_interval_contains_wrapped_points(self):
        iv = PerimeterInterval(5.5, 1.0)
        assert iv.end(6.0) == pytest.approx(0.5)
        assert iv.contains(0.2, 6.0)
        assert not iv.contains(1.0, 6.0)


class TestCollisions:
    def test_pose_valid_allows_tangent_disks(self, table):
        poses = [Point2(0.5, 0.5)]
        assert pose_valid(table, poses, Point2(0.6, 0.5), 0.05)
        assert not pose_valid(table, poses, Point2(0.59, 0.5), 0.05)

    def test_pose_valid_ignores_listed_objects(self, table):
        poses = [Point2(0.5, 0.5), Point2(1.5, 0.5)]
        assert pose_valid(table, poses, Point2(0.52, 0.5), 0.05, ignore=(0,))

    def test_pose_valid_rejects_out_of_bounds(self, table):
        assert not pose_valid(table, [], Point2(0.01, 0.5), 0.05)

    def test_sampled_pose_is_free_and_reachable(self, table):
        rng = np.random.default_rng(3)
        poses = [Point2(0.3, 0.3), Point2(0.6, 0.2)]
        forbidden = [Point2(0.45, 0.15)]
        for _ in range(20):
            p = sample_free_pose(table, poses, 0.05, rng, forbidden_poses=forbidden, within=(0.5, 0.5))
            assert p is not None
            assert pose_valid(table, poses + forbidden, p, 0.05)
            assert within_reach(table, 0.5, p, 0.5)

    def test_sampling_gives_up_on_a_full_table(self):
        tiny = TableSpec(0.1, 0.1)
        rng = np.random.default_rng(0)
        assert sample_free_pose(tiny, [Point2(0.05, 0.05)], 0.05, rng) is None
