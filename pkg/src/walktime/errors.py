"""Exception types shared across the package."""


class WalktimeError(Exception):
    """Base class for all package errors."""


class InvalidInputError(WalktimeError, ValueError):
    pass


class ConfigError(WalktimeError, ValueError):
    pass


class SchemaError(WalktimeError, ValueError):
    pass


class UndefinedStatisticError(WalktimeError, ValueError):
    """Raised when a statistic (correlation, R^2) is undefined for the input."""


class RankDeficiencyError(WalktimeError, ValueError):
    def __init__(self, message, columns=()):
        super().__init__(message)
        self.columns = tuple(columns)


class ConvergenceError(WalktimeError, RuntimeError):
    def __init__(self, message, objective=float("nan")):
        super().__init__(message)
        self.objective = objective


class UnsupportedModelError(WalktimeError, TypeError):
    pass
