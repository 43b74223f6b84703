"""Exception hierarchy shared across the package."""


class CollisimError(Exception):
    """Base class for all package errors."""


class ValidationError(CollisimError):
    """Inputs violate a documented precondition (shapes, ranges, config)."""


class ConfigError(ValidationError):
    """An experiment configuration file is malformed or inconsistent."""


class NumericError(CollisimError):
    """A numerical routine failed to converge or produced unusable output."""


class UndefinedLengthError(NumericError):
    """Correlation length requested for an all-zero profile."""


class ResourceError(CollisimError):
    """A configured resource cap (matrix dimension, memory) would be exceeded."""
