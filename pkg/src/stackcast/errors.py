"""Exception types shared across the package."""


class StackcastError(Exception):
    """Base class for all package-specific errors."""


class CsvParseError(StackcastError, ValueError):
    """Malformed CSV input; message carries row/column location."""


class DegenerateSignalError(StackcastError, ValueError):
    """Signal scaling requested for an all-zero coefficient vector."""


class SingularSystemError(StackcastError, RuntimeError):
    """A penalized normal-equation system is not SPD to working tolerance."""


class LeverageError(StackcastError, RuntimeError):
    """A candidate hat-matrix diagonal is too close to one for LOO division."""


class FoldError(StackcastError, RuntimeError):
    """Cross-validation folds could not be built (single-class training fold)."""


class VerificationFailure(StackcastError, RuntimeError):
    """A numerical verification run (eigenvalue checks) did not pass."""


class UsageError(StackcastError, ValueError):
    """Bad command-line arguments."""
