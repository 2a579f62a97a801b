"""Exception types shared across the package."""


class ShapeError(ValueError):
    """Operand shapes do not conform for the requested operation."""


class DomainError(ValueError):
    """Numeric input outside the domain of the operation (e.g. log of a non-positive value)."""


class ParameterError(ValueError):
    """An argument is outside its documented range."""


class DataLoadError(ValueError):
    """A dataset file is missing or malformed."""


class TrainingError(RuntimeError):
    """Training cannot continue (e.g. a non-finite gradient)."""


class ConfigError(ValueError):
    """A run configuration field is invalid; the message names the field."""
