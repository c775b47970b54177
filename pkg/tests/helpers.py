"""Builders shared by several test modules."""

import torch

from src.config import NetsConfig
from src.nets import ModuleNet
from src.scenesim import EnvFeatureSpec, ObjectModel, ObjectPose, SceneState

HARD = {"tablet", "keyboard", "book", "plate", "phone"}


def rectangle_object(width: float, depth: float, thickness: float = 0.01, category: str = "tablet") -> ObjectModel:
    hw, hd = width / 2, depth / 2
    return ObjectModel(
        id=f"rect_{width:.3f}x{depth:.3f}",
        footprint=((-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)),
        thickness=thickness,
        category=category,
        graspable_tag=category not in HARD,
    )


def flat_state(env: EnvFeatureSpec, obj: ObjectModel, x: float, y: float, yaw: float = 0.0) -> SceneState:
    return SceneState(env=env, object=obj, pose=ObjectPose(x, y, yaw))


class ConstantCritic(ModuleNet):
    """Module network whose critic scores every candidate `value`."""

    def __init__(self, module: int, cfg: NetsConfig, value: float):
        super().__init__(module, cfg)
        self.value = value

    def critic(self, f_s, contact, action):
        return torch.full((len(f_s),), self.value, dtype=f_s.dtype)
