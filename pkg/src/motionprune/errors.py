"""Exception types shared across the package."""


class MotionPruneError(Exception):
    """Base class for all errors raised by this package."""


class InvalidArgument(MotionPruneError, ValueError):
    """An argument violates a precondition (wrong range, non-finite, bad shape)."""


class InvalidState(MotionPruneError, RuntimeError):
    """An operation was called on an object in a state that cannot serve it."""


class ParseError(MotionPruneError, ValueError):
    """A file could not be parsed; carries location context in the message."""


class DegenerateInput(MotionPruneError, ValueError):
    """Input is structurally valid but degenerate (e.g. all-zero score vector)."""
