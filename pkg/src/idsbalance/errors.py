"""Exception types shared across the package."""


class IdsBalanceError(Exception):
    """Base class for every error raised by this package."""


class DataError(IdsBalanceError):
    """Input data is malformed or inconsistent."""


class ParseError(DataError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class EmptyDatasetError(DataError):
    pass


class UnknownLabelError(DataError):
    def __init__(self, token):
        self.token = token
        super().__init__(f"unknown attack name {token!r}")


class InvalidValueError(DataError):
    def __init__(self, message, row=None, column=None):
        self.row = row
        self.column = column
        super().__init__(message)


class InputError(DataError, ValueError):
    """Arguments violate an operation's preconditions."""


class ShapeError(InputError):
    pass


class ConfigurationError(IdsBalanceError, ValueError):
    pass


class StateError(IdsBalanceError, RuntimeError):
    """An object was used before it reached the required state."""


class DegenerateBatchError(InputError):
    pass


class DivergenceError(IdsBalanceError, ArithmeticError):
    def __init__(self, message, epoch=None, batch=None):
        self.epoch = epoch
        self.batch = batch
        where = []
        if epoch is not None:
            where.append(f"epoch {epoch}")
        if batch is not None:
            where.append(f"batch {batch}")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)


class PlanError(IdsBalanceError, ValueError):
    pass


class ConditionUnsatisfiableError(IdsBalanceError, LookupError):
    pass
