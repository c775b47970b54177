"""
Exception types shared by every package of the pre-grasp relay project.

Each exception carries the process exit code the CLI maps it to:
    1  generic domain failure
    2  usage / configuration error
    3  missing dependency (weights, manifest, input files)
    4  data corruption (checksums, schema versions)
"""


class PregraspError(Exception):
    """Base class for all domain errors raised by this project."""

    exit_code: int = 1


class ConfigError(PregraspError, ValueError):
    """Raised when a configuration document is malformed or has unknown keys."""

    exit_code = 2


class SceneSpecError(PregraspError, ValueError):
    """Raised when an environment or object description violates its invariants."""


class ContactOffObject(PregraspError, ValueError):
    """Raised when an action's contact point is not on the object surface."""


class ZeroDisplacement(PregraspError, ValueError):
    """Raised when a push displacement is shorter than the minimum step."""


class DisplacementTooLong(PregraspError, ValueError):
    """Raised when a push displacement exceeds the longest admissible push."""


class ObjectOccluded(PregraspError):
    """Raised when ray casting yields no object-labelled points."""


class RenderFailed(PregraspError):
    """Raised when ray casting cannot collect the requested number of points."""


class NoObjectPoints(PregraspError):
    """Raised when a planner receives a cloud without object-labelled points."""


class EmptyDataset(PregraspError):
    """Raised when training is asked to run on zero records."""


class NoPositiveSamples(PregraspError):
    """Raised when the proposal generator has no successful samples to learn from."""


class QuotaInfeasible(PregraspError):
    """Raised when dataset collection cannot meet its class quotas."""


class MissingDependency(PregraspError):
    """Raised when a required input artefact (weights, dataset) is absent."""

    exit_code = 3


class MissingManifest(MissingDependency):
    """Raised when a dataset directory has no manifest (incomplete write)."""


class SchemaMismatch(PregraspError):
    """Raised when a stored artefact has an unsupported schema version."""

    exit_code = 4


class CorruptFile(PregraspError):
    """Raised when a weight file fails its structural or CRC checks."""

    exit_code = 4


class CorruptShard(PregraspError):
    """Raised when a dataset shard does not match its manifest checksum."""

    exit_code = 4
