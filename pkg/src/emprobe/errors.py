"""Exception types shared across the package."""


class EmprobeError(Exception):
    """Base class for all errors raised by emprobe."""


class ValidationError(EmprobeError):
    """Bad input: malformed files, broken invariants, impossible requests."""


class ConvergenceError(EmprobeError):
    """An iterative solver failed to reach its tolerance within its budget."""


class SingularSystemError(EmprobeError):
    """A linear system that the caller's parameters made singular."""
