"""
Labelled point clouds of the scene from a virtual depth camera: camera
sampling, ray-cast rendering, canonicalisation and the PGRC record format.
"""

from .camera import CameraPose, object_centre, sample_camera
from .cloud import (
    CLOUD_MAGIC,
    CLOUD_VERSION,
    LabeledPointCloud,
    canonicalize,
    decode_cloud,
    encode_cloud,
    estimate_normals,
)
from .faces import ENVIRONMENT, OBJECT, scene_faces
from .render import observe, render_cloud

__all__ = [
    "CameraPose",
    "LabeledPointCloud",
    "OBJECT",
    "ENVIRONMENT",
    "CLOUD_MAGIC",
    "CLOUD_VERSION",
    "sample_camera",
    "object_centre",
    "render_cloud",
    "observe",
    "canonicalize",
    "encode_cloud",
    "decode_cloud",
    "estimate_normals",
    "scene_faces",
]
