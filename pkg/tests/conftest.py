# Shared fixtures: a 2 x 1 m table, reach 0.5 m, disks of radius 0.05 m, MC = 1.

from __future__ import annotations

import numpy as np
import pytest

from app.world.domain import Arrangement, CostModel, Scene, State
from app.world.geometry import Point2, ReachSpec, TableSpec

RADIUS = 0.05


def arrangement(*poses: tuple[float, float], radius: float = RADIUS) -> Arrangement:
    return Arrangement(tuple(Point2(*p) for p in poses), radius)


@pytest.fixture
def table() -> TableSpec:
    return TableSpec(2.0, 1.0)


@pytest.fixture
def scene(table: TableSpec) -> Scene:
    return Scene(table, ReachSpec(0.5))


@pytest.fixture
def cm(table: TableSpec) -> CostModel:
    return CostModel(1.0, table)


@pytest.fixture
def rng() -> np.random.Generator:
    return np.random.default_rng(7)


@pytest.fixture
def one_object() -> tuple[State, Arrangement]:
    """One object on the bottom side, goal further right on the same side."""
    return State(0.0, arrangement((0.5, 0.2))), arrangement((1.5, 0.2))


@pytest.fixture
def swap() -> tuple[State, Arrangement]:
    """Two touching objects that trade places."""
    return State(0.0, arrangement((0.6, 0.3), (0.7, 0.3))), arrangement((0.7, 0.3), (0.6, 0.3))
