"""Exception types shared across the package."""

from __future__ import annotations


class ParameterError(ValueError):
    """An argument lies outside an operation's domain."""


class StateSpaceError(ParameterError):
    """An exact computation would exceed its state-space guard."""


class DivergenceError(RuntimeError):
    """The choice distribution admits no stationary regime.

    Carries the first 0-based gap index whose prefix probability fails the
    strict drift condition sigma_upto[i] > (i + 1) / n, when known.
    """

    def __init__(self, message: str, gap_index: int | None = None) -> None:
        super().__init__(message)
        self.gap_index = gap_index


class QueueDrainedError(RuntimeError):
    """A replay emptied one of its queues; the initial population was too small."""
