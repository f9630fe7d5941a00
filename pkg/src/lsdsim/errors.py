"""Exception hierarchy shared by every module."""


class LsdSimError(Exception):
    """Base class for all simulator errors."""


# fixed-point
class Overflow(LsdSimError, OverflowError):
    pass


class DivideByZero(LsdSimError, ZeroDivisionError):
    pass


# shared input validation
class ZeroAmount(LsdSimError, ValueError):
    pass


class InsufficientBalance(LsdSimError):
    pass


# lsd protocols
class Paused(LsdSimError):
    pass


class NotBootstrapped(LsdSimError):
    pass


class WithdrawalsDisabled(LsdSimError):
    pass


class InsufficientProtocolLiquidity(LsdSimError):
    pass


class DepositPoolFull(LsdSimError):
    pass


class AssignExceedsBalance(LsdSimError):
    pass


# amm
class NoConvergence(LsdSimError, ArithmeticError):
    pass


class InsufficientLiquidity(LsdSimError):
    pass


class PriceOutOfRange(LsdSimError):
    pass


class ZeroLiquidity(LsdSimError):
    pass


class NothingToCollect(LsdSimError):
    pass


# arbitrage
class FlashLoanDefault(LsdSimError):
    pass


class InsufficientLenderLiquidity(LsdSimError):
    pass


class InvalidBounds(LsdSimError, ValueError):
    pass


# analytics
class InsufficientTicks(LsdSimError, ValueError):
    pass


class ZeroInitialValue(LsdSimError, ValueError):
    pass


class MissingHistory(LsdSimError, LookupError):
    pass


class SchemaError(LsdSimError, ValueError):
    """Input file does not match the expected CSV layout."""


# scenario
class ConfigError(LsdSimError, ValueError):
    def __init__(self, path: str, message: str):
        super().__init__(f"{path}: {message}")
        self.path = path


class CorruptSnapshot(LsdSimError, ValueError):
    pass


class InvariantViolation(LsdSimError, AssertionError):
    """An internal accounting invariant failed; indicates a bug, not bad input."""
