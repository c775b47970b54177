"""
PGWT weight files.

Layout (little-endian):
    magic      4 bytes  b"PGWT"
    schema     u16
    meta_len   u32, then meta_len bytes of UTF-8 JSON metadata
    count      u32
    count x (name_len u16, name, ndim u8, ndim x u32 dims, f32 payload)
    crc32      u32 over every preceding byte
"""

import json
import logging
import os
import struct
import zlib
from dataclasses import asdict, dataclass, field
from typing import Any, Optional

import numpy as np
import torch

from src.config import NetsConfig
from src.errors import CorruptFile, MissingDependency, SchemaMismatch
from src.logger import log_function
from src.storage import BaseStorage, LocalStorage

from .heads import ModuleNet

logger = logging.getLogger("nets")

WEIGHTS_MAGIC = b"PGWT"
WEIGHTS_SCHEMA = 1
_HEAD = struct.Struct("<4sH")
_U32 = struct.Struct("<I")
_U16 = struct.Struct("<H")


@dataclass
class ModuleWeights:
    """
    Parameters of one ModuleNet plus training metadata.

    metadata holds at least "nets" (the NetsConfig used to build the
    network); training adds seed, epochs, dataset_hash and config_hash.
    """

    module: int
    tensors: dict[str, np.ndarray]
    metadata: dict[str, Any] = field(default_factory=dict)
    schema_version: int = WEIGHTS_SCHEMA

    @classmethod
    def from_net(cls, net: ModuleNet, **metadata: Any) -> "ModuleWeights":
        tensors = {
            name: value.detach().cpu().to(torch.float32).numpy().copy()
            for name, value in net.state_dict().items()
        }
        meta = {"nets": _nets_to_json(net.cfg), **metadata}
        return cls(module=net.module, tensors=tensors, metadata=meta)

    def nets_config(self) -> NetsConfig:
        doc = self.metadata.get("nets", {})
        return NetsConfig(**{k: tuple(v) if isinstance(v, list) else v for k, v in doc.items()})

    def to_net(self) -> ModuleNet:
        """Rebuild the network and load these parameters into it."""
        net = ModuleNet(self.module, self.nets_config())
        net.load_state_dict({name: torch.from_numpy(value.copy()) for name, value in self.tensors.items()})
        net.eval()
        return net

    def equals(self, other: "ModuleWeights") -> bool:
        """Bit-exact comparison of every tensor and the metadata."""
        return (
            self.module == other.module
            and self.metadata == other.metadata
            and self.tensors.keys() == other.tensors.keys()
            and all(
                self.tensors[k].shape == other.tensors[k].shape
                and self.tensors[k].tobytes() == other.tensors[k].tobytes()
                for k in self.tensors
            )
        )


def _nets_to_json(cfg: NetsConfig) -> dict[str, Any]:
    return {k: list(v) if isinstance(v, tuple) else v for k, v in asdict(cfg).items()}


def encode_weights(weights: ModuleWeights) -> bytes:
    meta = json.dumps({"module": weights.module, **weights.metadata}, sort_keys=True).encode()
    parts = [_HEAD.pack(WEIGHTS_MAGIC, weights.schema_version), _U32.pack(len(meta)), meta]
    parts.append(_U32.pack(len(weights.tensors)))
    for name, value in weights.tensors.items():
        encoded = name.encode()
        array = np.ascontiguousarray(value, dtype="<f4")
        parts.append(_U16.pack(len(encoded)) + encoded)
        parts.append(struct.pack(f"<B{array.ndim}I", array.ndim, *array.shape))
        parts.append(array.tobytes())
    body = b"".join(parts)
    return body + _U32.pack(zlib.crc32(body))


def decode_weights(data: bytes) -> ModuleWeights:
    """
    Parse a PGWT file.

    Raises:
        CorruptFile: On a bad magic, a CRC mismatch or a malformed body.
        SchemaMismatch: On an unsupported schema version.
    """
    if len(data) < _HEAD.size + _U32.size:
        raise CorruptFile("Weight file shorter than its header")
    magic, schema = _HEAD.unpack_from(data)
    if magic != WEIGHTS_MAGIC:
        raise CorruptFile(f"Bad weight file magic {magic!r}")
    if schema != WEIGHTS_SCHEMA:
        raise SchemaMismatch(f"Weight schema {schema}, expected {WEIGHTS_SCHEMA}")
    body, (crc,) = data[:-4], _U32.unpack(data[-4:])
    if zlib.crc32(body) != crc:
        raise CorruptFile("Weight file CRC32 mismatch")

    try:
        offset = _HEAD.size
        (meta_len,) = _U32.unpack_from(body, offset)
        offset += _U32.size
        metadata = json.loads(body[offset : offset + meta_len])
        offset += meta_len
        (count,) = _U32.unpack_from(body, offset)
        offset += _U32.size
        tensors = {}
        for _ in range(count):
            (name_len,) = _U16.unpack_from(body, offset)
            offset += _U16.size
            name = body[offset : offset + name_len].decode()
            offset += name_len
            ndim = body[offset]
            offset += 1
            shape = struct.unpack_from(f"<{ndim}I", body, offset)
            offset += 4 * ndim
            size = int(np.prod(shape, dtype=np.int64))
            tensors[name] = np.frombuffer(body, dtype="<f4", count=size, offset=offset).reshape(shape).copy()
            offset += 4 * size
    except (struct.error, ValueError, IndexError, UnicodeDecodeError) as e:
        raise CorruptFile(f"Malformed weight file body: {e}") from e
    if offset != len(body):
        raise CorruptFile(f"Weight file has {len(body) - offset} trailing bytes")

    module = metadata.pop("module")
    return ModuleWeights(module=module, tensors=tensors, metadata=metadata, schema_version=schema)


@log_function(logger_name="nets", log_execution_time=True)
def save_weights(weights: ModuleWeights, path: str, storage: Optional[BaseStorage] = None) -> str:
    """
    Write a PGWT file.

    Returns:
        str: Absolute path of the written file.
    """
    storage = storage or LocalStorage()
    workspace = storage.create_workspace(os.path.dirname(path))
    saved = storage.save_bytes(workspace, os.path.basename(path), encode_weights(weights))
    logger.info(f"Saved module {weights.module} weights ({len(weights.tensors)} tensors) to {saved}")
    return saved


@log_function(logger_name="nets", log_execution_time=True)
def load_weights(path: str, storage: Optional[BaseStorage] = None) -> ModuleWeights:
    """
    Read a PGWT file.

    Raises:
        MissingDependency: If the file does not exist.
        CorruptFile: On structural or CRC damage.
        SchemaMismatch: On an unsupported schema version.
    """
    storage = storage or LocalStorage()
    workspace, filename = os.path.dirname(path) or ".", os.path.basename(path)
    if not storage.file_exist(workspace, filename):
        raise MissingDependency(f"Weight file not found: {path}")
    return decode_weights(storage.read_bytes(workspace, filename))
