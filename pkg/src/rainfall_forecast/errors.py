"""Exception hierarchy shared across the package."""


class RainfallError(Exception):
    """Base class for all package errors."""


class ParseError(RainfallError):
    """A data file line could not be parsed."""

    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class StructuralError(RainfallError):
    """Input data violates a structural invariant (ordering, duplicates, shapes)."""


class MissingDataError(RainfallError):
    """A required value is absent."""


class EmptySelectionError(RainfallError):
    pass


class PointNotFoundError(RainfallError, KeyError):
    def __init__(self, message, nearest=None):
        self.nearest = nearest
        super().__init__(message)

    def __str__(self):
        return self.args[0]


class RangeError(RainfallError, ValueError):
    """A requested time range is invalid or not covered by the data."""


class DegenerateScaleError(RainfallError, ValueError):
    pass


class InsufficientDataError(RainfallError, ValueError):
    pass


class SplitError(RainfallError, ValueError):
    pass


class RankError(RainfallError, ValueError):
    pass


class IllConditionedError(RainfallError):
    def __init__(self, message, ratio):
        self.ratio = ratio
        super().__init__(message)


class NumericError(RainfallError, FloatingPointError):
    """Non-finite value produced during a numeric computation."""


class TrainingError(RainfallError):
    def __init__(self, message, epoch):
        self.epoch = epoch
        super().__init__(message)


class SpecError(RainfallError, ValueError):
    """Generator specification violates its invariants."""
