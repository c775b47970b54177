"""Shared fixtures: simple scenes, a rectangular plate and a small encoder config."""

import pytest

from src.config import NetsConfig
from src.scenesim import EnvFeatureSpec, build_scene
from tests.helpers import rectangle_object


@pytest.fixture
def plate():
    """0.3 x 0.2 x 0.01 m plate."""
    return rectangle_object(0.3, 0.2)


@pytest.fixture
def empty_table():
    return EnvFeatureSpec()


@pytest.fixture
def edge_scene():
    return build_scene("edge")


@pytest.fixture
def wall_scene():
    return build_scene("wall")


@pytest.fixture
def tiny_nets():
    """Encoder sized for fast tests on a few hundred points."""
    return NetsConfig(sa_centroids=(32, 8), sa_neighbours=8)
