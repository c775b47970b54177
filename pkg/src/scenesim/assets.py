"""
Procedurally generated flat objects.

Hard-to-grasp categories are thin plates wider than the gripper opening in
every direction; easy-to-grasp categories are thick and narrow enough to be
pinched across. Every category generates `shapes_per_category` scaled
variants from its own seeded stream, so category subsets are stable.
"""

from typing import Callable, Iterable, Optional

import numpy as np

from src.errors import SceneSpecError

from .types import ObjectModel

TRAIN_HARD = ("tablet", "keyboard", "book", "plate", "phone")
TEST_HARD = ("tray", "board", "ruler", "lshape")
TRAIN_EASY = ("block", "can", "box", "mug", "bottle")
TEST_EASY = ("cup", "jar", "puck", "soap")

CATEGORY_SETS: dict[str, tuple[str, ...]] = {
    "train-hard": TRAIN_HARD,
    "test-hard": TEST_HARD,
    "train-easy": TRAIN_EASY,
    "test-easy": TEST_EASY,
}

ALL_CATEGORIES = TRAIN_HARD + TEST_HARD + TRAIN_EASY + TEST_EASY
HARD_CATEGORIES = frozenset(TRAIN_HARD + TEST_HARD)


def rectangle(width: float, depth: float) -> list[tuple[float, float]]:
    hw, hd = width / 2, depth / 2
    return [(-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)]


def regular_polygon(radius: float, sides: int) -> list[tuple[float, float]]:
    angles = 2 * np.pi * np.arange(sides) / sides
    return [(float(radius * np.cos(t)), float(radius * np.sin(t))) for t in angles]


def chamfered_rectangle(width: float, depth: float, cut: float) -> list[tuple[float, float]]:
    hw, hd = width / 2, depth / 2
    return [
        (-hw + cut, -hd), (hw - cut, -hd), (hw, -hd + cut), (hw, hd - cut),
        (hw - cut, hd), (-hw + cut, hd), (-hw, hd - cut), (-hw, -hd + cut),
    ]


def l_shape(long_arm: float, short_arm: float, width: float) -> list[tuple[float, float]]:
    return [
        (0.0, 0.0), (long_arm, 0.0), (long_arm, width), (width, width),
        (width, short_arm), (0.0, short_arm),
    ]


Generator = Callable[[np.random.Generator], tuple[list[tuple[float, float]], float]]

_GENERATORS: dict[str, Generator] = {
    # hard: thin, wider than the opening
    "tablet": lambda r: (rectangle(r.uniform(0.20, 0.26), r.uniform(0.14, 0.18)), r.uniform(0.007, 0.009)),
    "keyboard": lambda r: (rectangle(r.uniform(0.35, 0.44), r.uniform(0.12, 0.15)), r.uniform(0.010, 0.012)),
    "book": lambda r: (rectangle(r.uniform(0.18, 0.24), r.uniform(0.13, 0.17)), r.uniform(0.009, 0.012)),
    "plate": lambda r: (regular_polygon(r.uniform(0.10, 0.13), 16), r.uniform(0.006, 0.009)),
    "phone": lambda r: (rectangle(r.uniform(0.14, 0.17), r.uniform(0.09, 0.10)), r.uniform(0.007, 0.009)),
    "tray": lambda r: (chamfered_rectangle(r.uniform(0.28, 0.34), r.uniform(0.18, 0.22), 0.03), r.uniform(0.008, 0.011)),
    "board": lambda r: (rectangle(r.uniform(0.30, 0.40), r.uniform(0.20, 0.25)), r.uniform(0.005, 0.007)),
    "ruler": lambda r: (rectangle(r.uniform(0.28, 0.32), r.uniform(0.09, 0.10)), r.uniform(0.004, 0.006)),
    "lshape": lambda r: (l_shape(r.uniform(0.22, 0.28), r.uniform(0.18, 0.22), r.uniform(0.09, 0.10)), r.uniform(0.008, 0.011)),
    # easy: thick, narrow enough to pinch across
    "block": lambda r: (rectangle(r.uniform(0.05, 0.07), r.uniform(0.05, 0.12)), r.uniform(0.04, 0.06)),
    "can": lambda r: (regular_polygon(r.uniform(0.025, 0.033), 12), r.uniform(0.06, 0.08)),
    "box": lambda r: (rectangle(r.uniform(0.055, 0.065), r.uniform(0.10, 0.15)), r.uniform(0.045, 0.055)),
    "mug": lambda r: (regular_polygon(r.uniform(0.030, 0.035), 12), r.uniform(0.06, 0.08)),
    "bottle": lambda r: (regular_polygon(r.uniform(0.025, 0.030), 10), r.uniform(0.07, 0.08)),
    "cup": lambda r: (regular_polygon(r.uniform(0.030, 0.035), 8), r.uniform(0.05, 0.07)),
    "jar": lambda r: (regular_polygon(r.uniform(0.030, 0.035), 16), r.uniform(0.06, 0.075)),
    "puck": lambda r: (regular_polygon(r.uniform(0.033, 0.037), 12), r.uniform(0.025, 0.035)),
    "soap": lambda r: (rectangle(r.uniform(0.05, 0.06), r.uniform(0.08, 0.09)), r.uniform(0.03, 0.04)),
}


def categories_for(category_set: str) -> tuple[str, ...]:
    """Category names of a named set ("train-hard", ...) or a single category."""
    if category_set in CATEGORY_SETS:
        return CATEGORY_SETS[category_set]
    if category_set in _GENERATORS:
        return (category_set,)
    raise SceneSpecError(f"Unknown category set {category_set!r}")


def make_object(category: str, rng: np.random.Generator, index: int = 0) -> ObjectModel:
    if category not in _GENERATORS:
        raise SceneSpecError(f"Unknown object category {category!r}")
    footprint, thickness = _GENERATORS[category](rng)
    return ObjectModel(
        id=f"{category}_{index:02d}",
        footprint=tuple((float(x), float(y)) for x, y in footprint),
        thickness=float(thickness),
        category=category,
        graspable_tag=category not in HARD_CATEGORIES,
    )


def make_asset_set(
    seed: int,
    shapes_per_category: int = 10,
    categories: Optional[Iterable[str]] = None,
) -> dict[str, list[ObjectModel]]:
    """
    Generate scaled variants for each category.

    Args:
        seed: Asset seed; category k draws from default_rng([seed, k]).
        shapes_per_category: Variants per category.
        categories: Subset of category names (default: all).

    Returns:
        dict: category -> list of ObjectModel.
    """
    wanted = tuple(categories) if categories is not None else ALL_CATEGORIES
    assets = {}
    for category in wanted:
        k = ALL_CATEGORIES.index(category) if category in ALL_CATEGORIES else -1
        if k < 0:
            raise SceneSpecError(f"Unknown object category {category!r}")
        rng = np.random.default_rng([seed, k])
        assets[category] = [make_object(category, rng, i) for i in range(shapes_per_category)]
    return assets
