"""Exception hierarchy shared across fleetprint modules."""

from __future__ import annotations


class FleetprintError(Exception):
    """Base class for every error raised by this package."""


class InvalidSample(FleetprintError, ValueError):
    pass


class InvalidRun(FleetprintError, ValueError):
    pass


class EmptyRun(FleetprintError, ValueError):
    """A run produced no complete timestep bucket."""


class DimensionMismatch(FleetprintError, ValueError):
    pass


class InvalidConfig(FleetprintError, ValueError):
    pass


class ParseError(FleetprintError, ValueError):
    """Malformed telemetry record. ``line_no`` is 1-based and counts the header."""

    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"line {line_no}: {reason}")


class DegenerateData(FleetprintError, ValueError):
    pass


class InvalidParams(FleetprintError, ValueError):
    pass


class InsufficientRows(FleetprintError, ValueError):
    pass


class NComponentsTooLarge(FleetprintError, ValueError):
    pass


class LengthMismatch(FleetprintError, ValueError):
    pass


class EmptyInput(FleetprintError, ValueError):
    pass


class InsufficientData(FleetprintError, ValueError):
    pass


class KeyMismatch(FleetprintError, KeyError):
    pass


class PipelineMismatch(FleetprintError, ValueError):
    """A model bundle was used with a preprocessing pipeline it was not trained with."""


class ModelFormatError(FleetprintError, ValueError):
    pass
