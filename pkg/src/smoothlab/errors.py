"""Exception types shared across the package."""


class SmoothlabError(Exception):
    """Base class for all package-specific errors."""


class ShapeMismatchError(SmoothlabError, ValueError):
    """Operands have incompatible shapes; message names both shapes."""


class InvalidInputError(SmoothlabError, ValueError):
    """Input violates a precondition (NaN, empty set, out-of-range index...)."""


class ConfigurationError(SmoothlabError, ValueError):
    """A configuration value is inconsistent or unsupported."""


class InfiniteLossError(SmoothlabError, ValueError):
    """A log-loss is infinite: the prediction assigns exactly zero mass
    to a class that carries target probability."""


class DatasetParseError(SmoothlabError, ValueError):
    """A dataset file failed to parse; message names the offending row."""


class DivergenceError(SmoothlabError, RuntimeError):
    """Training produced a non-finite loss; message names the batch and
    learning rate so the run can be diagnosed rather than silently clamped."""


class CacheMismatchError(SmoothlabError, RuntimeError):
    """A backward pass was given a forward cache that does not belong to
    the current parameter state."""


class CheckpointFormatError(SmoothlabError, ValueError):
    """A checkpoint file is corrupt or has an unsupported version."""


class DegenerateDataError(SmoothlabError, ValueError):
    """Input data is degenerate for the requested computation
    (e.g. all feature rows identical when projecting)."""
