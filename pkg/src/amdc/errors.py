"""
Exception hierarchy for amdc.

All errors derive from ``ValueError`` so callers that already guard numeric
code with ``except ValueError`` keep working.
"""


class AmdcError(ValueError):
    """Base class for all amdc errors."""


class InputError(AmdcError):
    """Unreadable or malformed input (files, labels, schemas)."""


class ValidationError(AmdcError):
    """A parameter or invariant check failed."""


class MissingDataError(AmdcError):
    """A sequence with missing positions was used where a complete one is required."""


class EmptyDatasetError(AmdcError):
    """An operation produced no sequences."""


class DecompositionError(AmdcError):
    """The singular value decomposition failed."""


class ConfigError(AmdcError):
    """Invalid configuration file or command-line option."""
