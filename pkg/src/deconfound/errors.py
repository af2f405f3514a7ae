"""Exception hierarchy shared by all modules."""


class DeconfoundError(Exception):
    pass


class SchemaError(DeconfoundError, ValueError):
    pass


class UnknownVariable(SchemaError, KeyError):
    def __str__(self):
        return Exception.__str__(self)


class SchemaMismatch(SchemaError):
    pass


class OverlappingVariables(SchemaError):
    pass


class ZeroMass(DeconfoundError, ValueError):
    pass


class ConditioningOnNull(DeconfoundError, ValueError):
    pass


class SupportViolation(DeconfoundError, ValueError):
    pass


class InfeasibleSample(DeconfoundError, ValueError):
    pass


class NonpositiveCell(DeconfoundError, ValueError):
    pass


class NotConverged(DeconfoundError, RuntimeError):
    def __init__(self, message, residual=None, iterations=None):
        super().__init__(message)
        self.residual = residual
        self.iterations = iterations


class InconsistentConstraints(NotConverged):
    pass


class EmptyGroup(DeconfoundError, ValueError):
    pass


class UndefinedRatio(DeconfoundError, ArithmeticError):
    pass


class ZeroDenominator(UndefinedRatio):
    pass


class ParseError(DeconfoundError, ValueError):
    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BadGridSpec(DeconfoundError, ValueError):
    pass


class MissingDelta(DeconfoundError, ValueError):
    pass
