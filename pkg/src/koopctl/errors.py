"""Exception types shared across the toolkit."""


class KoopctlError(Exception):
    """Base class for toolkit-specific failures."""


class TrajectoryFormatError(KoopctlError, ValueError):
    """An interchange file violates the koopctl-traj-v1 format.

    Carries the 1-based line number of the offending record when known.
    """

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class DegenerateDataError(KoopctlError, RuntimeError):
    """Snapshot data carries no usable signal (e.g. all-zero inputs)."""


class NumericalError(KoopctlError, RuntimeError):
    """A numerical routine failed or produced non-finite values."""
