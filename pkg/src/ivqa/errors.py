"""Exception types shared across the package."""


class IvqaError(Exception):
    """Base class for all package errors."""


class DimensionError(IvqaError):
    """Tensor shapes are inconsistent with the requested operation."""


class DomainError(IvqaError):
    """A numeric argument lies outside the mathematically valid domain."""


class StateError(IvqaError):
    """An optimizer or parameter container is in an unusable state."""


class EvaluationError(IvqaError):
    """A loss or metric evaluation produced a non-finite or invalid value."""


class ParseError(IvqaError):
    """Raised for unparseable textual input (not for grammar rejection)."""


class ConfigError(IvqaError):
    """Invalid configuration value or unknown configuration key."""


class DependencyError(IvqaError):
    """A pipeline stage ran before the artifacts it depends on exist."""


class FormatError(IvqaError):
    """An artifact on disk does not match the expected schema or version."""


class PoolError(IvqaError):
    """A ranking pool could not be filled with enough distinct candidates."""


class StaleRolloutError(IvqaError):
    """Rollouts were sampled from parameters that have since been updated."""
