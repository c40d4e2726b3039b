"""Spread-change series and the daily average spread."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Tuple

import numpy as np

from .errors import DegenerateDayError
from .models import MeanMethod, Quote, TradingDayBounds

LOGGER = logging.getLogger(__name__)


@dataclass
class SeriesQuality:
    """Instants excluded from the observations, and the state at the open."""

    undefined_instants: int = 0
    nonpositive_instants: int = 0
    one_sided_at_open: bool = False

    @property
    def flags(self) -> List[str]:
        flags = []
        if self.undefined_instants:
            flags.append("one-sided-book")
        if self.nonpositive_instants:
            flags.append("crossed-book")
        if self.one_sided_at_open:
            flags.append("one-sided-at-open")
        return flags


@dataclass(eq=False)
class SpreadSeries:
    """Spread values at every in-hours instant where the spread changed.

    ``times_ms`` is strictly increasing and consecutive ``spreads`` differ.
    """

    t0_ms: int
    te_ms: int
    times_ms: np.ndarray
    spreads: np.ndarray
    quality: SeriesQuality = field(default_factory=SeriesQuality)

    def __post_init__(self) -> None:
        self.times_ms = np.asarray(self.times_ms, dtype=np.int64)
        self.spreads = np.asarray(self.spreads, dtype=np.float64)
        if self.times_ms.shape != self.spreads.shape:
            raise ValueError("times and spreads must have the same length")

    def __len__(self) -> int:
        return int(self.times_ms.size)

    @property
    def elapsed_ms(self) -> np.ndarray:
        return self.times_ms - self.t0_ms

    @property
    def observations(self) -> List[Tuple[int, float]]:
        return list(zip(self.times_ms.tolist(), self.spreads.tolist()))

    def equals(self, other: "SpreadSeries") -> bool:
        return (
            self.t0_ms == other.t0_ms
            and self.te_ms == other.te_ms
            and np.array_equal(self.times_ms, other.times_ms)
            and np.array_equal(self.spreads, other.spreads)
        )

    def scaled(self, factor: float) -> "SpreadSeries":
        return SpreadSeries(self.t0_ms, self.te_ms, self.times_ms, self.spreads * factor, self.quality)

    def shifted(self, delta_ms: int) -> "SpreadSeries":
        return SpreadSeries(
            self.t0_ms + delta_ms, self.te_ms + delta_ms, self.times_ms + delta_ms, self.spreads, self.quality
        )


@dataclass(frozen=True)
class DailyAverageSpread:
    value: float
    method: MeanMethod


def _spread_or_none(quote: Quote) -> Optional[int]:
    if quote.best_bid is None or quote.best_ask is None:
        return None
    return quote.best_ask - quote.best_bid


def extract_spread_changes(
    quotes: Iterable[Quote], bounds: TradingDayBounds = TradingDayBounds()
) -> SpreadSeries:
    """Build the in-hours spread-change series from a quote-change stream.

    Quotes before the open only establish the carry-over spread, which is
    never an observation. Several changes within one millisecond collapse to
    the state at the end of that millisecond. Undefined and non-positive
    spreads are counted in the quality report instead of being observed.
    """

    quality = SeriesQuality()
    times: List[int] = []
    values: List[int] = []
    last_value: Optional[int] = None
    pending_time: Optional[int] = None
    pending_quote: Optional[Quote] = None
    open_checked = False

    def settle(time_ms: int, quote: Quote) -> None:
        nonlocal last_value
        value = _spread_or_none(quote)
        if value is None:
            quality.undefined_instants += 1
            return
        if value <= 0:
            quality.nonpositive_instants += 1
            return
        if value != last_value:
            times.append(time_ms)
            values.append(value)
            last_value = value

    for quote in quotes:
        if quote.time_ms < bounds.t0_ms:
            last_value = _spread_or_none(quote)
            continue
        if quote.time_ms > bounds.te_ms:
            break
        if not open_checked:
            open_checked = True
            quality.one_sided_at_open = last_value is None
            if last_value is not None and last_value <= 0:
                last_value = None
        if pending_time is not None and quote.time_ms != pending_time:
            settle(pending_time, pending_quote)  # type: ignore[arg-type]
        pending_time = quote.time_ms
        pending_quote = quote
    if pending_time is not None:
        settle(pending_time, pending_quote)  # type: ignore[arg-type]

    if not times:
        raise DegenerateDayError("no spread changes during trading hours")
    return SpreadSeries(bounds.t0_ms, bounds.te_ms, np.array(times), np.array(values), quality)


def mean_spread(series: SpreadSeries, method: MeanMethod = MeanMethod.TIME_WEIGHTED) -> DailyAverageSpread:
    """Daily average spread <s>.

    The time-weighted mean integrates the piecewise-constant spread from the
    first observation to the close; the per-change mean averages observations.
    """

    if len(series) == 0:
        raise DegenerateDayError("cannot average an empty spread series")
    method = MeanMethod(method)
    if method is MeanMethod.PER_CHANGE:
        return DailyAverageSpread(float(series.spreads.mean()), method)
    span = series.te_ms - int(series.times_ms[0])
    if span <= 0:
        return DailyAverageSpread(float(series.spreads.mean()), method)
    ends = np.append(series.times_ms[1:], series.te_ms)
    durations = (ends - series.times_ms).astype(np.float64)
    return DailyAverageSpread(float(np.dot(series.spreads, durations) / span), method)


def write_series_csv(series: SpreadSeries, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(["time_ms", "spread_units"])
        for time_ms, value in zip(series.times_ms.tolist(), series.spreads.tolist()):
            writer.writerow([time_ms, _format_number(value)])


def read_series_csv(path: str | Path, bounds: TradingDayBounds = TradingDayBounds()) -> SpreadSeries:
    times: List[int] = []
    values: List[float] = []
    with Path(path).open("r", encoding="utf-8", newline="") as handle:
        reader = csv.DictReader(handle)
        for row in reader:
            times.append(int(row["time_ms"]))
            values.append(float(row["spread_units"]))
    return SpreadSeries(bounds.t0_ms, bounds.te_ms, np.array(times), np.array(values))


def _format_number(value: float) -> str:
    return str(int(value)) if float(value).is_integer() else repr(float(value))
