"""
Dataset directories: PGSH shard files plus a JSON manifest.

Shard layout (little-endian):
    magic   4 bytes  b"PGSH"
    version u16
    count   u32
    count x (length u32, record bytes)

manifest.json is written last, atomically; a directory without it is an
incomplete write.
"""

import hashlib
import json
import logging
import struct
from collections import Counter
from typing import Any, Optional, Sequence

from src.errors import CorruptShard, MissingManifest, SchemaMismatch
from src.logger import log_with_timer
from src.storage import BaseStorage, LocalStorage

from .records import EpisodeRecord, decode_record, encode_record

logger = logging.getLogger("datagen")

SHARD_MAGIC = b"PGSH"
SHARD_VERSION = 1
MANIFEST_SCHEMA = 1
MANIFEST_NAME = "manifest.json"
MAX_SHARD_RECORDS = 4096
_HEADER = struct.Struct("<4sHI")
_U32 = struct.Struct("<I")


def encode_shard(records: Sequence[EpisodeRecord]) -> bytes:
    parts = [_HEADER.pack(SHARD_MAGIC, SHARD_VERSION, len(records))]
    for record in records:
        payload = encode_record(record)
        parts += [_U32.pack(len(payload)), payload]
    return b"".join(parts)


def decode_shard(data: bytes, name: str = "shard") -> list[EpisodeRecord]:
    if len(data) < _HEADER.size:
        raise CorruptShard(f"{name}: shorter than its header")
    magic, version, count = _HEADER.unpack_from(data)
    if magic != SHARD_MAGIC:
        raise CorruptShard(f"{name}: bad magic {magic!r}")
    if version != SHARD_VERSION:
        raise SchemaMismatch(f"{name}: unsupported shard version {version}")
    offset = _HEADER.size
    records = []
    for _ in range(count):
        if offset + _U32.size > len(data):
            raise CorruptShard(f"{name}: truncated")
        (size,) = _U32.unpack_from(data, offset)
        offset += _U32.size
        records.append(decode_record(data[offset : offset + size]))
        offset += size
    if offset != len(data):
        raise CorruptShard(f"{name}: {len(data) - offset} trailing bytes")
    return records


def dataset_counts(records: Sequence[EpisodeRecord]) -> dict[str, Any]:
    """Class, scene and category tallies of a record sequence."""
    success = sum(1 for r in records if r.success)
    return {
        "success": success,
        "failure": len(records) - success,
        "per_scene": dict(sorted(Counter(r.scene for r in records).items())),
        "per_category": dict(sorted(Counter(r.state.object.category for r in records).items())),
    }


@log_with_timer("datagen")
def write_shards(
    records: Sequence[EpisodeRecord],
    directory: str,
    config_hash: str = "",
    shard_size: int = MAX_SHARD_RECORDS,
    extra: Optional[dict[str, Any]] = None,
    storage: Optional[BaseStorage] = None,
) -> dict[str, Any]:
    """
    Write records as shards of at most shard_size records, then the manifest.

    Args:
        records: Records in collection order.
        directory: Dataset directory (created if needed).
        config_hash: Hash of the generating configuration.
        shard_size: Records per shard (capped at 4096).
        extra: Additional manifest fields (seed, kind, quotas...).
        storage: Storage backend (default: local filesystem).

    Returns:
        dict: The manifest written.
    """
    storage = storage or LocalStorage()
    shard_size = max(1, min(shard_size, MAX_SHARD_RECORDS))
    workspace = storage.create_workspace(directory)

    shards = []
    for start in range(0, len(records), shard_size):
        chunk = records[start : start + shard_size]
        data = encode_shard(chunk)
        name = f"shard_{len(shards):05d}.pgsh"
        storage.save_bytes(workspace, name, data)
        shards.append({"file": name, "records": len(chunk), "sha256": hashlib.sha256(data).hexdigest()})

    manifest = {
        "schema_version": MANIFEST_SCHEMA,
        "total": len(records),
        "counts": dataset_counts(records),
        "shards": shards,
        "config_hash": config_hash,
        **(extra or {}),
    }
    storage.atomic_save_text(workspace, MANIFEST_NAME, json.dumps(manifest, indent=2, sort_keys=True))
    logger.info(f"Wrote {len(records)} records in {len(shards)} shards to {workspace}")
    return manifest


def read_manifest(directory: str, storage: Optional[BaseStorage] = None) -> dict[str, Any]:
    storage = storage or LocalStorage()
    if not storage.file_exist(directory, MANIFEST_NAME):
        raise MissingManifest(f"No {MANIFEST_NAME} in {directory}: missing or partially written dataset")
    manifest = json.loads(storage.read_text(directory, MANIFEST_NAME))
    if manifest.get("schema_version") != MANIFEST_SCHEMA:
        raise SchemaMismatch(f"Manifest schema {manifest.get('schema_version')}, expected {MANIFEST_SCHEMA}")
    return manifest


def dataset_hash(manifest: dict[str, Any]) -> str:
    """Hash identifying a dataset by its shard checksums."""
    joined = "".join(s["sha256"] for s in manifest["shards"])
    return hashlib.sha256(joined.encode()).hexdigest()


@log_with_timer("datagen")
def read_shards(directory: str, storage: Optional[BaseStorage] = None) -> list[EpisodeRecord]:
    """
    Read every record of a dataset directory, in collection order.

    Raises:
        MissingManifest: If manifest.json is absent.
        CorruptShard: If a shard is missing, fails its checksum or is malformed.
        SchemaMismatch: On unsupported manifest or shard versions.
    """
    storage = storage or LocalStorage()
    manifest = read_manifest(directory, storage)
    records = []
    for shard in manifest["shards"]:
        if not storage.file_exist(directory, shard["file"]):
            raise CorruptShard(f"Shard {shard['file']} listed in the manifest is missing")
        data = storage.read_bytes(directory, shard["file"])
        if hashlib.sha256(data).hexdigest() != shard["sha256"]:
            raise CorruptShard(f"Shard {shard['file']} fails its SHA-256 checksum")
        chunk = decode_shard(data, shard["file"])
        if len(chunk) != shard["records"]:
            raise CorruptShard(f"Shard {shard['file']} holds {len(chunk)} records, manifest says {shard['records']}")
        records.extend(chunk)
    if len(records) != manifest["total"]:
        raise CorruptShard(f"Dataset holds {len(records)} records, manifest says {manifest['total']}")
    return records
