"""Exception hierarchy shared across the toolkit."""


class DoppelError(Exception):
    """Base class for all errors raised by this package."""


class DimensionError(DoppelError):
    """Operand shapes do not conform."""


class InputError(DoppelError):
    """Caller-supplied data violates a precondition."""


class StateError(DoppelError):
    """Operation requires a state the object is not in (e.g. unfitted model)."""


class NumericError(DoppelError):
    """A non-finite value appeared where finite arithmetic is required."""


class ConfigError(DoppelError):
    """Invalid training or search configuration."""


class RegistryConflictError(DoppelError):
    """Attempt to register a (key, version) pair that already exists."""


class RegistryLookupError(DoppelError):
    """Requested key is not present in the registry."""


class UnsupportedMapError(DoppelError):
    """The requested mapping strategy is not defined for this model family."""


class SearchFailureError(DoppelError):
    """Every architecture-search trial diverged."""

    def __init__(self, message, trials=()):
        super().__init__(message)
        self.trials = list(trials)


class ExportError(DoppelError):
    """Graph construction failed for the given network."""


class ParseError(DoppelError):
    """Malformed serialized input (protobuf bytes, CSV, or native JSON)."""

    def __init__(self, message, offset=None):
        super().__init__(message)
        self.offset = offset


class EvaluationError(DoppelError):
    """Graph interpretation failed at a node."""
