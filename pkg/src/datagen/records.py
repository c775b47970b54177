"""
Episode records and their binary encoding.

A record stores everything needed to regenerate its clouds: the scene
state and the observation seeds. With embedding enabled the clouds are
also carried as PGRC payloads.
"""

import json
import struct
from dataclasses import dataclass, field, replace
from typing import Any, Optional

import numpy as np

from src.cloudgen import LabeledPointCloud, decode_cloud, encode_cloud, observe
from src.config import CloudGenConfig
from src.errors import CorruptShard
from src.scenesim import (
    GraspAction,
    PreGraspAction,
    PushOutcome,
    SafetyEvent,
    SceneState,
    pose_from_json,
    pose_to_json,
    state_from_json,
    state_to_json,
)

GRASP_KIND = "grasp"
PREGRASP_KIND = "pregrasp"
KINDS = (GRASP_KIND, PREGRASP_KIND)

_U32 = struct.Struct("<I")


@dataclass(frozen=True)
class EpisodeRecord:
    """
    One simulated grasp or push episode.

    Grasp records carry r and the gripper safety event; pre-grasp records
    carry the PushOutcome and the seed of the cloud observed after the push.
    point_index is the action's contact in the cloud observed before.
    """

    kind: str
    scene: str
    state: SceneState
    cloud_seed: int
    point_index: int
    action: GraspAction | PreGraspAction
    success: bool
    episode_seed: tuple[int, int]
    r: Optional[int] = None
    safety: SafetyEvent = SafetyEvent.NONE
    outcome: Optional[PushOutcome] = None
    cloud_after_seed: Optional[int] = None
    embedded_before: Optional[LabeledPointCloud] = field(default=None, compare=False, repr=False)
    embedded_after: Optional[LabeledPointCloud] = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if self.kind == GRASP_KIND:
            if self.r is None or self.outcome is not None or not isinstance(self.action, GraspAction):
                raise ValueError("Grasp records need r and a GraspAction and no push outcome")
        elif self.kind == PREGRASP_KIND:
            if self.outcome is None or self.r is not None or not isinstance(self.action, PreGraspAction):
                raise ValueError("Pre-grasp records need a PushOutcome and a PreGraspAction and no r")
        else:
            raise ValueError(f"Unknown record kind {self.kind!r}")

    @property
    def state_after(self) -> Optional[SceneState]:
        if self.outcome is None:
            return None
        return SceneState(self.state.env, self.state.object, self.outcome.new_pose, self.state.seed)

    def cloud_before(self, cfg: Optional[CloudGenConfig] = None) -> LabeledPointCloud:
        if self.embedded_before is not None:
            return self.embedded_before
        return observe(self.state, self.cloud_seed, cfg)

    def cloud_after(self, cfg: Optional[CloudGenConfig] = None) -> Optional[LabeledPointCloud]:
        """Cloud observed after the push; None when no after-observation was taken."""
        if self.embedded_after is not None:
            return self.embedded_after
        if self.cloud_after_seed is None:
            return None
        return observe(self.state_after, self.cloud_after_seed, cfg)


def _action_to_json(action: GraspAction | PreGraspAction) -> dict[str, Any]:
    if isinstance(action, GraspAction):
        return {"contact": list(action.contact), "orientation": list(action.orientation)}
    return {"contact": list(action.contact), "displacement": list(action.displacement)}


def _action_from_json(doc: dict[str, Any]) -> GraspAction | PreGraspAction:
    contact = tuple(float(v) for v in doc["contact"])
    if "orientation" in doc:
        return GraspAction(contact=contact, orientation=tuple(float(v) for v in doc["orientation"]))
    return PreGraspAction(contact=contact, displacement=tuple(float(v) for v in doc["displacement"]))


def record_to_json(record: EpisodeRecord) -> dict[str, Any]:
    doc = {
        "kind": record.kind,
        "scene": record.scene,
        "state": state_to_json(record.state),
        "cloud_seed": record.cloud_seed,
        "point_index": record.point_index,
        "action": _action_to_json(record.action),
        "success": record.success,
        "episode_seed": list(record.episode_seed),
        "safety": record.safety.value,
    }
    if record.r is not None:
        doc["r"] = record.r
    if record.outcome is not None:
        o = record.outcome
        doc["outcome"] = {
            "new_pose": pose_to_json(o.new_pose),
            "slip": o.slip,
            "rotation": list(o.rotation),
            "safety": o.safety.value,
            "travelled": o.travelled,
        }
        doc["cloud_after_seed"] = record.cloud_after_seed
    return doc


def record_from_json(doc: dict[str, Any]) -> EpisodeRecord:
    outcome = None
    if "outcome" in doc:
        o = doc["outcome"]
        outcome = PushOutcome(
            new_pose=pose_from_json(o["new_pose"]),
            slip=float(o["slip"]),
            rotation=tuple(float(v) for v in o["rotation"]),
            safety=SafetyEvent(o["safety"]),
            travelled=float(o["travelled"]),
        )
    return EpisodeRecord(
        kind=doc["kind"],
        scene=doc["scene"],
        state=state_from_json(doc["state"]),
        cloud_seed=int(doc["cloud_seed"]),
        point_index=int(doc["point_index"]),
        action=_action_from_json(doc["action"]),
        success=bool(doc["success"]),
        episode_seed=tuple(int(v) for v in doc["episode_seed"]),
        r=doc.get("r"),
        safety=SafetyEvent(doc["safety"]),
        outcome=outcome,
        cloud_after_seed=doc.get("cloud_after_seed"),
    )


def encode_record(record: EpisodeRecord) -> bytes:
    """JSON header followed by the embedded PGRC clouds (if any)."""
    header = json.dumps(record_to_json(record), sort_keys=True).encode()
    blobs = [encode_cloud(c) for c in (record.embedded_before, record.embedded_after) if c is not None]
    parts = [_U32.pack(len(header)), header, _U32.pack(len(blobs))]
    for blob in blobs:
        parts += [_U32.pack(len(blob)), blob]
    return b"".join(parts)


def decode_record(data: bytes) -> EpisodeRecord:
    try:
        (header_len,) = _U32.unpack_from(data, 0)
        offset = _U32.size
        doc = json.loads(data[offset : offset + header_len])
        offset += header_len
        (n_blobs,) = _U32.unpack_from(data, offset)
        offset += _U32.size
        clouds = []
        for _ in range(n_blobs):
            (size,) = _U32.unpack_from(data, offset)
            offset += _U32.size
            clouds.append(decode_cloud(data[offset : offset + size]))
            offset += size
    except (struct.error, ValueError, KeyError) as e:
        raise CorruptShard(f"Malformed record: {e}") from e

    record = record_from_json(doc)
    if not clouds:
        return record
    before = clouds[0]
    after = clouds[1] if len(clouds) > 1 else None
    return _with_clouds(record, before, after)


def _with_clouds(
    record: EpisodeRecord, before: LabeledPointCloud, after: Optional[LabeledPointCloud]
) -> EpisodeRecord:
    return replace(record, embedded_before=before, embedded_after=after)


def embed_clouds(record: EpisodeRecord, cfg: Optional[CloudGenConfig] = None) -> EpisodeRecord:
    """Copy of a record carrying its clouds as payloads."""
    return _with_clouds(record, record.cloud_before(cfg), record.cloud_after(cfg))


def nearest_object_point(cloud: LabeledPointCloud, point) -> int:
    """Index of the object-labelled cloud point closest to a world location."""
    indices = cloud.object_indices
    d = np.linalg.norm(cloud.world_points()[indices] - np.asarray(point, dtype=float), axis=1)
    return int(indices[int(np.argmin(d))])
