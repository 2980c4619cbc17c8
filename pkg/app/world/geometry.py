# =============================================================================
# Tabletop Rearrangement Planner - Perimeter Geometry
# v1.0.0
# =============================================================================
# Exact 1-D geometry on the boundary of a rectangular table.
#
# The robot may only stand on the table's boundary rectangle. A standing
# location is a single arc-length coordinate s, measured counter-clockwise
# from the (0, 0) corner:
#
#     bottom edge  s in [0, W)          (x grows, y = 0)
#     right edge   s in [W, W+H)        (x = W, y grows)
#     top edge     s in [W+H, 2W+H)     (x shrinks, y = H)
#     left edge    s in [2W+H, P)       (x = 0, y shrinks)
#
# Reach sets are computed per edge by circle/segment intersection and then
# stitched across corners into maximal wrapped intervals.
#
# Every function here is pure; random draws come from an explicit
# numpy Generator.
# =============================================================================

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from app.config import BUFFER_SAMPLE_ATTEMPTS

# Slack for tangency and interval-endpoint comparisons.
EPS: float = 1e-9

# Interval pieces shorter than this are touch points and are dropped.
_MIN_LENGTH: float = 1e-12

PerimeterCoord = float


class GeometryError(ValueError):
    """Raised for coordinates outside the perimeter range."""


@dataclass(frozen=True)
class TableSpec:
    width: float
    height: float

    def __post_init__(self) -> None:
        if self.width <= 0 or self.height <= 0:
            raise GeometryError(
                f"Table dimensions must be positive, got {self.width} x {self.height}."
            )

    @property
    def perimeter(self) -> float:
        return perimeter_length(self)


class Point2(NamedTuple):
    x: float
    y: float

    def distance_to(self, other: Point2) -> float:
        return math.hypot(self.x - other.x, self.y - other.y)


@dataclass(frozen=True)
class PerimeterInterval:
    """Arc [start, start + length] on the perimeter circle, wrapping modulo P."""

    start: PerimeterCoord
    length: float

    def end(self, perimeter: float) -> PerimeterCoord:
        return (self.start + self.length) % perimeter

    def is_full(self, perimeter: float) -> bool:
        return self.length >= perimeter - EPS

    def contains(self, s: PerimeterCoord, perimeter: float, tol: float = EPS) -> bool:
        if self.is_full(perimeter):
            return True
        offset = (s - self.start) % perimeter
        # Points just before start wrap to offset ~P.
        return offset <= self.length + tol or offset >= perimeter - tol

    def endpoints(self, perimeter: float) -> tuple[PerimeterCoord, PerimeterCoord]:
        return self.start, self.end(perimeter)


@dataclass(frozen=True)
class ReachSpec:
    rho: float

    def __post_init__(self) -> None:
        if self.rho <= 0:
            raise GeometryError(f"Manipulation range must be positive, got {self.rho}.")

    @classmethod
    def default_for(cls, table: TableSpec) -> ReachSpec:
        """Half of the smaller table dimension: enough to reach every pose."""
        return cls(rho=0.5 * min(table.width, table.height))


# ---------------------------------------------------------------------------
# Perimeter parameterization
# ---------------------------------------------------------------------------


def perimeter_length(table: TableSpec) -> float:
    return 2.0 * (table.width + table.height)


def _edges(table: TableSpec) -> list[tuple[float, Point2, Point2, float]]:
    """(s at edge start, edge start point, unit direction, edge length), CCW."""
    w, h = table.width, table.height
    return [
        (0.0, Point2(0.0, 0.0), Point2(1.0, 0.0), w),
        (w, Point2(w, 0.0), Point2(0.0, 1.0), h),
        (w + h, Point2(w, h), Point2(-1.0, 0.0), w),
        (2.0 * w + h, Point2(0.0, h), Point2(0.0, -1.0), h),
    ]


def coord_to_point(table: TableSpec, s: PerimeterCoord) -> Point2:
    """Map a perimeter coordinate to its point on the boundary rectangle.

    Raises:
        GeometryError: If s is outside [0, P).
    """
    perimeter = perimeter_length(table)
    if not 0.0 <= s < perimeter:
        raise GeometryError(f"Perimeter coordinate {s} outside [0, {perimeter}).")

    for s0, origin, direction, length in _edges(table):
        if s < s0 + length:
            t = s - s0
            return Point2(origin.x + t * direction.x, origin.y + t * direction.y)

    # Rounding at s ~ P: treat as the (0, 0) corner.
    return Point2(0.0, 0.0)


def travel_cost(table: TableSpec, s1: PerimeterCoord, s2: PerimeterCoord) -> float:
    """Shortest around-the-table distance between two standing locations."""
    perimeter = perimeter_length(table)
    d = abs(s1 - s2) % perimeter
    return min(d, perimeter - d)


def path_passes_through(
    table: TableSpec,
    s_from: PerimeterCoord,
    s_to: PerimeterCoord,
    s_via: PerimeterCoord,
) -> bool:
    """True iff s_via lies on the shortest boundary path from s_from to s_to.

    When both directions are equally long the counter-clockwise path is used.
    Endpoints count as lying on the path.
    """
    perimeter = perimeter_length(table)
    ccw = (s_to - s_from) % perimeter
    if ccw <= perimeter / 2.0:
        return (s_via - s_from) % perimeter <= ccw + EPS
    cw = perimeter - ccw
    return (s_from - s_via) % perimeter <= cw + EPS


def within_reach(table: TableSpec, s: PerimeterCoord, p: Point2, rho: float) -> bool:
    """Whether a robot standing at s can manipulate an object centered at p."""
    return coord_to_point(table, s).distance_to(p) <= rho + EPS


# ---------------------------------------------------------------------------
# Reach regions
# ---------------------------------------------------------------------------


def reach_intervals(table: TableSpec, p: Point2, rho: float) -> list[PerimeterInterval]:
    """Exact boundary arcs whose points lie within rho of p.

    Each edge contributes the chord of the reach circle it cuts; pieces that
    meet at a corner (including the wrap at s = 0) are joined. Zero-length
    touch points are dropped. Sorted by start.
    """
    perimeter = perimeter_length(table)
    pieces: list[list[float]] = []

    for s0, origin, direction, length in _edges(table):
        rel_x, rel_y = origin.x - p.x, origin.y - p.y
        b = direction.x * rel_x + direction.y * rel_y
        c = rel_x * rel_x + rel_y * rel_y - rho * rho
        disc = b * b - c
        if disc <= 0.0:
            continue
        root = math.sqrt(disc)
        t1 = max(-b - root, 0.0)
        t2 = min(-b + root, length)
        if t2 - t1 <= _MIN_LENGTH:
            continue
        lo, hi = s0 + t1, s0 + t2
        if pieces and lo - pieces[-1][1] <= _MIN_LENGTH:
            pieces[-1][1] = hi
        else:
            pieces.append([lo, hi])

    if not pieces:
        return []

    # Wrap across the (0, 0) corner.
    if len(pieces) > 1 and pieces[0][0] <= _MIN_LENGTH and pieces[-1][1] >= perimeter - _MIN_LENGTH:
        last = pieces.pop()
        first = pieces.pop(0)
        wrapped = PerimeterInterval(last[0], (last[1] - last[0]) + (first[1] - first[0]))
        intervals = [PerimeterInterval(lo, hi - lo) for lo, hi in pieces] + [wrapped]
        return sorted(intervals, key=lambda iv: iv.start)

    if len(pieces) == 1 and pieces[0][1] - pieces[0][0] >= perimeter - _MIN_LENGTH:
        return [PerimeterInterval(0.0, perimeter)]

    return [PerimeterInterval(lo, hi - lo) for lo, hi in pieces]


def nearest_perimeter_coord(table: TableSpec, p: Point2) -> PerimeterCoord:
    """Boundary coordinate closest to p; equidistant edges resolve to the smallest s."""
    perimeter = perimeter_length(table)
    best_d = math.inf
    best_s = 0.0

    for s0, origin, direction, length in _edges(table):
        t = direction.x * (p.x - origin.x) + direction.y * (p.y - origin.y)
        t = min(max(t, 0.0), length)
        foot = Point2(origin.x + t * direction.x, origin.y + t * direction.y)
        d = foot.distance_to(p)
        s = (s0 + t) % perimeter
        if d < best_d - EPS or (abs(d - best_d) <= EPS and s < best_s):
            best_d, best_s = d, s

    return best_s


# ---------------------------------------------------------------------------
# Collision checks and free-pose sampling
# ---------------------------------------------------------------------------


def _as_array(poses: Iterable[Point2] | np.ndarray) -> np.ndarray:
    if isinstance(poses, np.ndarray):
        return poses.astype(float).reshape(-1, 2)
    return np.asarray([tuple(p) for p in poses], dtype=float).reshape(-1, 2)


def in_bounds(table: TableSpec, p: Point2, radius: float) -> bool:
    return (
        radius - EPS <= p.x <= table.width - radius + EPS
        and radius - EPS <= p.y <= table.height - radius + EPS
    )


def pose_valid(
    table: TableSpec,
    poses: Sequence[Point2] | np.ndarray,
    candidate: Point2,
    radius: float,
    ignore: Iterable[int] = (),
) -> bool:
    """Whether a disk at candidate is in bounds and overlaps no other disk.

    poses is indexed by object id; ids in ignore are left out of the check.
    Tangent disks are allowed.
    """
    if not in_bounds(table, candidate, radius):
        return False

    arr = _as_array(poses)
    if arr.shape[0] == 0:
        return True

    mask = np.ones(arr.shape[0], dtype=bool)
    for k in ignore:
        mask[k] = False
    others = arr[mask]
    if others.shape[0] == 0:
        return True

    dist = np.hypot(others[:, 0] - candidate.x, others[:, 1] - candidate.y)
    return bool(np.all(dist >= 2.0 * radius - EPS))


def sample_free_pose(
    table: TableSpec,
    poses: Sequence[Point2] | np.ndarray,
    radius: float,
    rng: np.random.Generator,
    forbidden_poses: Iterable[Point2] = (),
    within: tuple[PerimeterCoord, float] | None = None,
    ignore: Iterable[int] = (),
    max_attempts: int = BUFFER_SAMPLE_ATTEMPTS,
) -> Point2 | None:
    """Rejection-sample a collision-free disk pose.

    Candidates are drawn uniformly over the in-bounds box (clipped to the
    reach disk's bounding box when within=(s, rho) is given) and the first
    one that clears every object footprint, every forbidden footprint and
    the reach constraint is returned. None after max_attempts draws.
    """
    lo = np.array([radius, radius])
    hi = np.array([table.width - radius, table.height - radius])

    anchor: Point2 | None = None
    reach = 0.0
    if within is not None:
        anchor = coord_to_point(table, within[0])
        reach = within[1]
        lo = np.maximum(lo, [anchor.x - reach, anchor.y - reach])
        hi = np.minimum(hi, [anchor.x + reach, anchor.y + reach])

    if np.any(hi < lo):
        return None

    cand = rng.uniform(lo, hi, size=(max_attempts, 2))
    ok = np.ones(max_attempts, dtype=bool)

    if anchor is not None:
        ok &= np.hypot(cand[:, 0] - anchor.x, cand[:, 1] - anchor.y) <= reach

    arr = _as_array(poses)
    if arr.shape[0]:
        mask = np.ones(arr.shape[0], dtype=bool)
        for k in ignore:
            mask[k] = False
        arr = arr[mask]

    blockers = np.vstack([arr, _as_array(forbidden_poses)])
    if blockers.shape[0]:
        diff = cand[:, None, :] - blockers[None, :, :]
        dist = np.hypot(diff[..., 0], diff[..., 1])
        ok &= np.all(dist >= 2.0 * radius - EPS, axis=1)

    hits = np.flatnonzero(ok)
    if hits.size == 0:
        return None
    x, y = cand[hits[0]]
    return Point2(float(x), float(y))
