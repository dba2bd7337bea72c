"""Exception hierarchy.

Input problems derive from :class:`InputError` (CLI exit code 1), numerical
failures from :class:`NumericalError` (exit code 2).
"""


class TvpfError(Exception):
    pass


class InputError(TvpfError, ValueError):
    pass


class NumericalError(TvpfError, ArithmeticError):
    pass


# -- case files ---------------------------------------------------------------

class MalformedCase(InputError):
    def __init__(self, message, line=None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class MissingSlack(InputError):
    pass


class DuplicateBusId(InputError):
    pass


class NonPositiveBase(InputError):
    pass


class ZeroImpedanceBranch(InputError):
    pass


# -- power flow -----------------------------------------------------------------

class DimensionMismatch(InputError):
    pass


class NonConvergence(NumericalError):
    def __init__(self, message, iterations=None, mismatch=None, breakpoint=None):
        self.iterations = iterations
        self.mismatch = mismatch
        self.breakpoint = breakpoint
        super().__init__(message)


class SingularJacobian(NumericalError):
    pass


# -- derivatives / norms --------------------------------------------------------

class MissingLowerOrder(InputError):
    pass


class EmptyInput(InputError):
    pass


class InvalidOrder(InputError):
    pass


class ZeroFirstDerivative(NumericalError):
    pass


# -- intervals / schedules ------------------------------------------------------

class TimeOutOfInterval(InputError):
    pass


class NonMonotonicTimes(InputError):
    pass


class LayoutMismatch(InputError):
    pass


class InfeasibleScenario(NumericalError):
    def __init__(self, message, breakpoint=None):
        self.breakpoint = breakpoint
        super().__init__(message)


# -- combinatorics ----------------------------------------------------------------

class Overflow(NumericalError, OverflowError):
    pass


class EvenArgument(InputError):
    pass


class OutOfRange(InputError):
    pass
