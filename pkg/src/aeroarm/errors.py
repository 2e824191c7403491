"""Exception hierarchy for aeroarm."""


class AeroArmError(Exception):
    """Base class for all library errors."""


class NotSkewSymmetric(AeroArmError, ValueError):
    pass


class Degenerate(AeroArmError, ValueError):
    pass


class SingularGains(AeroArmError, ValueError):
    pass


class Unreachable(AeroArmError, ValueError):
    pass


class DegenerateTarget(Unreachable):
    pass


class ConfigError(AeroArmError, ValueError):
    pass


class ParseError(ConfigError):
    """Scenario text is not well-formed. Carries 1-based line/column when known."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = ""
        if line is not None:
            where = f" (line {line}, column {column})"
        super().__init__(message + where)


class ValidationError(ConfigError):
    pass


class NumericalDivergence(AeroArmError, RuntimeError):
    pass


class NoContact(AeroArmError, ValueError):
    pass
