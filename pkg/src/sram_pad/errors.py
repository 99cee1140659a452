"""Exception types shared across the package."""


class SramPadError(Exception):
    """Base class for all package errors."""


class InvalidParameterError(SramPadError, ValueError):
    pass


class ConfigError(SramPadError):
    pass


class UnsupportedTechnologyError(SramPadError, KeyError):
    pass


class InoperableVoltageError(SramPadError):
    """Supply at or below the cell's retention level."""


class NumericalFailureError(SramPadError):
    def __init__(self, message, voltage=None):
        super().__init__(message)
        self.voltage = voltage


class InfeasibleDesignError(SramPadError):
    pass


class UndefinedMetricError(SramPadError):
    pass


class SearchSpaceTooLargeError(SramPadError):
    def __init__(self, cardinality, limit):
        super().__init__(f"search space has {cardinality} points (limit {limit})")
        self.cardinality = cardinality
        self.limit = limit
