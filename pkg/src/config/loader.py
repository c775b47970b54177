"""TOML loading, validation and hashing of run configurations."""

import dataclasses
import hashlib
import json
import logging
import os
try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib
from pathlib import Path
from typing import Any, Optional

from src.errors import ConfigError

from .settings import RunConfig

logger = logging.getLogger("cli")

_TOP_LEVEL_SCALARS = ("seed", "output_dir")


def _coerce(value: Any, template: Any, where: str) -> Any:
    """Coerce a TOML value to the type of the dataclass default it replaces."""
    if isinstance(template, bool):
        if not isinstance(value, bool):
            raise ConfigError(f"{where}: expected a boolean, got {value!r}")
        return value
    if isinstance(template, int):
        if isinstance(value, bool) or not isinstance(value, int):
            raise ConfigError(f"{where}: expected an integer, got {value!r}")
        return value
    if isinstance(template, float):
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ConfigError(f"{where}: expected a number, got {value!r}")
        return float(value)
    if isinstance(template, str):
        if not isinstance(value, str):
            raise ConfigError(f"{where}: expected a string, got {value!r}")
        return value
    if isinstance(template, tuple):
        if not isinstance(value, list):
            raise ConfigError(f"{where}: expected an array, got {value!r}")
        if template:
            return tuple(_coerce(v, template[0], where) for v in value)
        return tuple(value)
    return value


def _apply_group(group: Any, table: dict[str, Any], group_name: str) -> Any:
    known = {f.name for f in dataclasses.fields(group)}
    unknown = sorted(set(table) - known)
    if unknown:
        raise ConfigError(f"Unknown keys in [{group_name}]: {', '.join(unknown)}")
    updates = {
        key: _coerce(value, getattr(group, key), f"{group_name}.{key}")
        for key, value in table.items()
    }
    return dataclasses.replace(group, **updates)


def load_run_config(path: Optional[str | Path] = None) -> RunConfig:
    """
    Build a RunConfig from defaults, an optional TOML document and PGR_SEED.

    Args:
        path: TOML file whose tables are group names ([scenesim], [planner], ...)
              and whose top-level keys are `seed` and `output_dir`.

    Returns:
        RunConfig: The resolved configuration.

    Raises:
        ConfigError: On unknown tables or keys, wrong value types, or an
            unreadable document.
    """
    cfg = RunConfig()
    group_names = [
        f.name for f in dataclasses.fields(cfg) if f.name not in _TOP_LEVEL_SCALARS
    ]

    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"Config file not found: {path}")
        try:
            document = tomllib.loads(path.read_text())
        except tomllib.TOMLDecodeError as e:
            raise ConfigError(f"Invalid TOML in {path}: {e}") from e

        updates: dict[str, Any] = {}
        for key, value in document.items():
            if key in _TOP_LEVEL_SCALARS:
                updates[key] = _coerce(value, getattr(cfg, key), key)
            elif key in group_names:
                if not isinstance(value, dict):
                    raise ConfigError(f"[{key}] must be a table")
                updates[key] = _apply_group(getattr(cfg, key), value, key)
            else:
                raise ConfigError(f"Unknown config table or key: {key}")
        cfg = dataclasses.replace(cfg, **updates)
        logger.info(f"Loaded configuration from {path}")

    raw_seed = os.getenv("PGR_SEED")
    if raw_seed is not None and raw_seed.strip():
        try:
            cfg = dataclasses.replace(cfg, seed=int(raw_seed))
        except ValueError as e:
            raise ConfigError(f"PGR_SEED must be an integer, got {raw_seed!r}") from e
        logger.info(f"Seed overridden by PGR_SEED={cfg.seed}")

    return cfg


def config_to_dict(cfg: Any) -> dict[str, Any]:
    """Plain-dict view of any configuration dataclass (tuples become lists)."""
    return json.loads(json.dumps(dataclasses.asdict(cfg)))


def config_hash(cfg: Any) -> str:
    """SHA-256 over the canonical JSON of a resolved configuration."""
    canonical = json.dumps(dataclasses.asdict(cfg), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()
