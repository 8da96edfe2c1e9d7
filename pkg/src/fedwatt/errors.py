"""Exception types shared across the package."""


class FedwattError(Exception):
    """Base class for all package errors."""


class ValidationError(FedwattError):
    """A precondition, invariant, or configuration constraint was violated.

    The CLI maps this to exit code 1; everything else maps to exit code 2.
    """


class TrainingDivergedError(FedwattError):
    """A non-finite loss or gradient appeared during an update loop."""
