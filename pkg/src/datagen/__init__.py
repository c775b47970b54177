"""
Dataset collection: the grasp and pre-grasp pipelines, episode records and
the sharded on-disk format.
"""

from .collect import Collection, collect_grasp, collect_pregrasp
from .records import (
    GRASP_KIND,
    KINDS,
    PREGRASP_KIND,
    EpisodeRecord,
    decode_record,
    embed_clouds,
    encode_record,
    nearest_object_point,
    record_from_json,
    record_to_json,
)
from .sampling import (
    feature_distance_pose,
    feature_pose,
    random_table_pose,
    sample_boundary_contact,
    sample_hemisphere_grasp,
    sample_push_direction,
    sample_push_magnitude,
)
from .shards import (
    MANIFEST_NAME,
    MAX_SHARD_RECORDS,
    dataset_counts,
    dataset_hash,
    decode_shard,
    encode_shard,
    read_manifest,
    read_shards,
    write_shards,
)

__all__ = [
    # records
    "GRASP_KIND",
    "PREGRASP_KIND",
    "KINDS",
    "EpisodeRecord",
    "record_to_json",
    "record_from_json",
    "encode_record",
    "decode_record",
    "embed_clouds",
    "nearest_object_point",
    # collection
    "Collection",
    "collect_grasp",
    "collect_pregrasp",
    "feature_pose",
    "feature_distance_pose",
    "random_table_pose",
    "sample_push_direction",
    "sample_push_magnitude",
    "sample_boundary_contact",
    "sample_hemisphere_grasp",
    # shards
    "MANIFEST_NAME",
    "MAX_SHARD_RECORDS",
    "encode_shard",
    "decode_shard",
    "write_shards",
    "read_shards",
    "read_manifest",
    "dataset_counts",
    "dataset_hash",
]
