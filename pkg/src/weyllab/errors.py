"""Exception types shared across the package."""


class WeylLabError(Exception):
    pass


class NonIntegrable(WeylLabError):
    pass


class NotInvertible(WeylLabError):
    pass


class WindowTooLarge(WeylLabError):
    pass


class PrefixExceeded(WeylLabError):
    pass


class PrefixExhausted(WeylLabError):
    pass


class NotDivergent(WeylLabError):
    pass


class TooFewSamples(WeylLabError):
    pass


class NotAsymptoticallyEqual(WeylLabError):
    pass


class DomainError(WeylLabError, ValueError):
    pass


class ParseError(WeylLabError, ValueError):
    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = ""
        if path is not None:
            where += str(path)
        if line is not None:
            where += f":{line}" if where else f"line {line}"
        super().__init__(f"{where}: {message}" if where else message)


class NotAscending(ParseError):
    pass


class EmptyInput(ParseError):
    pass


class NoConvergence(WeylLabError):
    pass


class SpecError(WeylLabError, ValueError):
    """Malformed model or function spec string."""


class Overflow(WeylLabError, OverflowError):
    pass
