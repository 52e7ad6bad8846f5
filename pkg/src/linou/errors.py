"""Exception hierarchy.

Every error carries a process exit code so the CLI can map failures
without a lookup table: 2 for bad input, 3 for numerical failure,
4 for non-convergence.
"""


class LinOUError(Exception):
    exit_code = 3


class InputError(LinOUError, ValueError):
    exit_code = 2


class NumericalError(LinOUError, ArithmeticError):
    exit_code = 3


class ConvergenceError(LinOUError, RuntimeError):
    exit_code = 4


# model-core
class InvalidParameters(InputError):
    pass


class StationarityViolation(InputError):
    pass


class DegenerateGamma(InputError):
    pass


# charfn
class SingularDenominator(NumericalError):
    pass


class ContourSingularity(NumericalError):
    pass


class StripViolation(NumericalError):
    pass


# cumulants
class NonPositiveVariance(NumericalError):
    pass


# pricer
class EmptyContourRegion(NumericalError):
    pass


class OutOfBounds(NumericalError):
    pass


class QuadratureNonConvergence(ConvergenceError):
    pass


class NoConvergence(ConvergenceError):
    pass


# calibration
class InsufficientQuotes(InputError):
    pass


class NonConvergence(ConvergenceError):
    pass


class AllStartsFailed(ConvergenceError):
    pass


# io
class ParseError(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class SchemaMismatch(InputError):
    pass


class EmptyBlock(InputError):
    pass
