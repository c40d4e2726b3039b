"""Exception hierarchy for the spread seasonality pipeline."""
from __future__ import annotations

from typing import Optional


class SpreadSeasonalityError(Exception):
    """Base class for all errors raised by the package."""


class IngestError(SpreadSeasonalityError):
    """An event file could not be turned into a valid event stream."""

    def __init__(self, message: str, line_number: Optional[int] = None):
        self.line_number = line_number
        self.message = message
        prefix = f"line {line_number}: " if line_number is not None else ""
        super().__init__(prefix + message)


class EventParseError(IngestError):
    """Malformed line: wrong column count or a non-numeric field."""


class EventOrderingError(IngestError):
    """Timestamps go backwards within a file."""


class EventFormatError(IngestError):
    """Unknown kind or direction code, or a value outside its domain."""


class BookIntegrityError(SpreadSeasonalityError):
    """An event is inconsistent with the reconstructed book."""


class UndefinedQuoteError(SpreadSeasonalityError):
    """Midpoint or spread requested for a one-sided book."""


class DegenerateDayError(SpreadSeasonalityError):
    """A stock-day yields no usable spread observations."""


class InsufficientDataError(SpreadSeasonalityError):
    """Too few observations for a moving-average window layout."""


class StatisticUnavailableError(SpreadSeasonalityError):
    """A derived statistic cannot be computed for the given input."""


class ScenarioError(SpreadSeasonalityError):
    """Invalid synthetic scenario parameters."""
