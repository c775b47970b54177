"""
Learnable components: the per-point encoder and, for each module, the
affordance head, the conditional VAE proposal generator and the critic.
"""

from .heads import ACTION_DIMS, GRASP, PREGRASP, ModuleNet
from .inference import (
    PointFeatures,
    action_to_raw,
    affordance,
    critic,
    critic_raw,
    cloud_tensors,
    decode_displacement,
    decode_orientation,
    encode,
    encode_action,
    propose,
    propose_raw,
    raw_to_action,
    sample_latents,
    score_affordance_map,
)
from .pointnet import PointEncoder, farthest_point_sample, query_ball_point
from .rotation import euler_to_6d, geodesic_distance, gram_schmidt, reflect_into_hemisphere
from .weights import (
    WEIGHTS_MAGIC,
    WEIGHTS_SCHEMA,
    ModuleWeights,
    decode_weights,
    encode_weights,
    load_weights,
    save_weights,
)

__all__ = [
    "PREGRASP",
    "GRASP",
    "ACTION_DIMS",
    "ModuleNet",
    "PointEncoder",
    "PointFeatures",
    "ModuleWeights",
    "WEIGHTS_MAGIC",
    "WEIGHTS_SCHEMA",
    "encode",
    "affordance",
    "score_affordance_map",
    "propose",
    "propose_raw",
    "raw_to_action",
    "encode_action",
    "critic",
    "critic_raw",
    "cloud_tensors",
    "sample_latents",
    "action_to_raw",
    "decode_displacement",
    "decode_orientation",
    "gram_schmidt",
    "geodesic_distance",
    "euler_to_6d",
    "reflect_into_hemisphere",
    "farthest_point_sample",
    "query_ball_point",
    "encode_weights",
    "decode_weights",
    "save_weights",
    "load_weights",
]
