"""Trial scene sampler."""

from typing import Optional

import numpy as np

from src.config import RunConfig
from src.datagen import feature_distance_pose, random_table_pose
from src.errors import SceneSpecError
from src.scenesim import ObjectModel, SceneState, build_scene, categories_for, make_asset_set

MAX_POSE_TRIES = 50


def trial_assets(seed: int, category_sets, cfg: RunConfig) -> dict[str, list[ObjectModel]]:
    """Shape variants of every category used by the given sets."""
    categories = sorted({c for name in category_sets for c in categories_for(name)})
    return make_asset_set(seed, cfg.datagen.shapes_per_category, categories)


def sample_trial_state(
    scene: str,
    category_set: str,
    rng: np.random.Generator,
    assets: dict[str, list[ObjectModel]],
    cfg: Optional[RunConfig] = None,
) -> SceneState:
    """
    Draw the scene of one trial.

    Hard-to-grasp objects lie flat at a uniform distance from a random
    feature; easy objects land anywhere on the table.

    Raises:
        SceneSpecError: If no admissible pose is found in MAX_POSE_TRIES draws.
    """
    cfg = cfg or RunConfig()
    env = build_scene(scene, cfg.scenesim)
    categories = categories_for(category_set)
    shapes = assets[categories[int(rng.integers(len(categories)))]]
    obj = shapes[int(rng.integers(len(shapes)))]
    dg = cfg.datagen

    for _ in range(MAX_POSE_TRIES):
        if obj.graspable_tag:
            pose = random_table_pose(env, obj, rng, cfg.scenesim)
        else:
            distance = float(rng.uniform(dg.feature_distance_min, dg.feature_distance_max))
            pose = feature_distance_pose(env, obj, distance, rng, cfg=cfg.scenesim)
        if pose is not None and pose.supported:
            return SceneState(env, obj, pose)
    raise SceneSpecError(f"No admissible pose for {obj.id} in scene {scene}")
