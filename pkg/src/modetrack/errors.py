"""Shared exception types for the modetrack engine."""

from __future__ import annotations


class ModetrackError(Exception):
    """Base class for all engine errors."""


class BackendUnavailable(ModetrackError):
    """A remote agent/encoder backend could not be reached or returned a transport error."""


class SchemaViolation(ModetrackError):
    """A reply violated the expected JSON schema.

    Carries the byte offset of the first offending position in the reply so
    failures can be pinpointed in logs.
    """

    def __init__(self, message: str, offset: int = 0):
        super().__init__(f"{message} (byte offset {offset})")
        self.offset = offset


class DimensionMismatch(ModetrackError):
    """Vector dimension differs from the one pinned for the run."""


class ShapeMismatch(ModetrackError):
    """Array arguments disagree in shape or length."""


class EmptyInput(ModetrackError):
    """An operation that needs at least one element received none."""


class NumericalFailure(ModetrackError):
    """Non-finite values appeared where finite numbers are required."""


class MissingPrice(ModetrackError):
    """A required price bar is absent from the price table."""


class EmptyUniverse(ModetrackError):
    """The trading universe is empty."""


class SizeLimitExceeded(ModetrackError):
    """A brute-force oracle was asked to handle an instance above its size cap."""


class DegenerateDay(ModetrackError):
    """A cross-section was constant where variation is required (e.g. zero-variance returns)."""


class UncoveredDays(ModetrackError):
    """The regime calendar does not cover every day it is applied to."""
