"""Errors raised by the construction routines."""

from __future__ import annotations


class OperatorForgeError(Exception):
    """Base class for every failure specific to this package."""


class HypothesisViolationError(OperatorForgeError):
    """Input data violates a stated precondition of a construction."""


class GammaDegenerateError(OperatorForgeError):
    """The start vector stays inside the reachable subspace after all retries.

    The chain construction divides by the distance gamma from x to V.
    When gamma stays below gamma_min even after the seeded perturbation
    retries, no chain direction can be extracted.
    """


class InsufficientDimensionError(OperatorForgeError):
    """The ambient space is too small to hold the required fresh directions."""

    def __init__(self, message: str, required_dim: int | None = None):
        super().__init__(message)
        self.required_dim = required_dim


class IndefiniteFormError(OperatorForgeError):
    """The defect form has a negative eigenvalue beyond tolerance.

    This signals that the base operator norm actually exceeds R, so the
    request data is inconsistent.
    """


class PositivityLostError(OperatorForgeError):
    """The b-sequence radicand is indistinguishable from zero at working precision.

    Retry with a larger precision_bits.
    """


class NoRoomError(OperatorForgeError):
    """No admissible direction is left for the next independence step.

    In finite dimension this is the termination signal, not a failure:
    the orbit prefix already spans the whole space.
    """


class MaxStepsExceededError(OperatorForgeError):
    """Step budget ran out before the independence procedure terminated."""


class BudgetExhaustedError(OperatorForgeError):
    """A chain-length search exceeded its hard cap."""
