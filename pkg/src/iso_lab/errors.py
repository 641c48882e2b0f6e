"""Exception hierarchy; every error knows the exit code the CLI reports for it."""


class IsoLabError(Exception):
    """Base class for all iso_lab errors."""

    exit_code = 1


class InvalidInputError(IsoLabError, ValueError):
    """Malformed or inconsistent input data."""

    exit_code = 2


class InvalidParameterError(InvalidInputError):
    """A numeric parameter lies outside its documented range."""


class InvalidSpecError(InvalidInputError):
    """An ensemble specification cannot be generated."""


class DegenerateInputError(InvalidInputError):
    """Zero operator, all-zero weights or a vanishing normalizer."""


class ZeroColumnError(InvalidInputError):
    def __init__(self, index: int) -> None:
        super().__init__(f"Column {index} is zero and cannot be normalized.")
        self.index = index


class DiagonalViolationError(InvalidInputError):
    def __init__(self, index: int, value: float) -> None:
        super().__init__(f"Diagonal entry ({index}, {index}) = {value:.3e} is not zero.")
        self.index = index
        self.value = value


class SizeCapError(IsoLabError):
    """Problem exceeds the desk-scale caps."""

    exit_code = 3


class ConvergenceError(IsoLabError):
    exit_code = 4


class NoCertificateError(IsoLabError):
    """The witness game could not be certified; carries the best pair found."""

    exit_code = 4

    def __init__(self, message: str, primal=None, dual=None, gap: float = float("inf")) -> None:
        super().__init__(message)
        self.primal = primal
        self.dual = dual
        self.gap = gap


class TraceFailedError(IsoLabError):
    exit_code = 4

    def __init__(self, trace) -> None:
        failed = [check.label for check in trace.checks if not check.passed]
        super().__init__(f"Proof trace failed checks: {', '.join(failed)}")
        self.trace = trace


class InternalInvariantError(IsoLabError, AssertionError):
    """Something that the mathematics guarantees did not hold."""
