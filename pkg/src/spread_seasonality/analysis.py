"""Opening duration, tick regime, power-law fit and opening-vs-day statistics."""
from __future__ import annotations

import logging
from collections import defaultdict
from dataclasses import dataclass
from typing import Dict, Iterable, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np

from .errors import DegenerateDayError, StatisticUnavailableError
from .models import (
    MS_PER_HOUR,
    MS_PER_MINUTE,
    ComparisonInterval,
    EventColumns,
    EventKind,
    IntervalTag,
    MarketEvent,
    OpeningResult,
    OpeningStatus,
    PowerLawFit,
    Quote,
    StockDayReport,
    StockSummary,
    TickClass,
    TickCriterion,
    TickLabel,
    TradingDayBounds,
    VolatilityReport,
)
from .series import DailyAverageSpread
from .smooth import SmoothedSeries

LOGGER = logging.getLogger(__name__)

NOON_MS = 12 * MS_PER_HOUR
TWO_PM_MS = 14 * MS_PER_HOUR
RETURN_STEP_MS = MS_PER_MINUTE

MeanLike = Union[DailyAverageSpread, float]


def _mean_value(mean: MeanLike) -> float:
    return mean.value if isinstance(mean, DailyAverageSpread) else float(mean)


# ----------------------------------------------------------------------
# opening period
# ----------------------------------------------------------------------
def detect_opening(smoothed: SmoothedSeries, mean: MeanLike, factor: float = 1.5) -> OpeningResult:
    """End of the opening period: the last time the moving average exceeds ``factor * <s>``."""

    if smoothed.normalized:
        raise ValueError("opening detection needs the raw (not normalized) moving average")
    if len(smoothed) == 0:
        raise DegenerateDayError("empty moving average")
    threshold = factor * _mean_value(mean)
    above = np.flatnonzero(smoothed.means > threshold)
    if above.size == 0:
        return OpeningResult(float(smoothed.t0_ms), 0.0, OpeningStatus.NEVER_ABOVE, threshold)
    last = int(above[-1])
    duration = float(smoothed.elapsed_ms[last])
    status = OpeningStatus.ALWAYS_ABOVE if above.size == len(smoothed) else OpeningStatus.OK
    return OpeningResult(smoothed.t0_ms + duration, duration, status, threshold)


# ----------------------------------------------------------------------
# tick regime
# ----------------------------------------------------------------------
def classify_tick(
    smoothed: SmoothedSeries,
    tick_size: float,
    mean: MeanLike,
    criterion: TickCriterion | str = TickCriterion.TERMINAL_SATURATION,
    saturation_tolerance: float = 1.05,
    mean_threshold_ticks: float = 1.15,
) -> TickClass:
    """Large-tick if the spread saturates at one tick, or if <s> is below the threshold."""

    criterion = TickCriterion(criterion)
    if criterion is TickCriterion.MEAN_SPREAD_THRESHOLD:
        large = _mean_value(mean) < mean_threshold_ticks * tick_size
        return TickClass(TickLabel.LARGE if large else TickLabel.SMALL, criterion, mean_threshold_ticks)

    if smoothed.normalized:
        raise ValueError("saturation is judged on the raw moving average")
    tail = smoothed.means[~smoothed.partial][-2:]
    if tail.size < 2:
        tail = smoothed.means[-2:]
    large = tail.size > 0 and bool(np.all(tail <= saturation_tolerance * tick_size))
    return TickClass(TickLabel.LARGE if large else TickLabel.SMALL, criterion, saturation_tolerance)


def detect_degenerate_start(smoothed: SmoothedSeries, tick_size: float, tolerance: float = 1.1) -> bool:
    """Flag days whose very first window already sits at about one tick."""

    if len(smoothed) == 0:
        raise DegenerateDayError("empty moving average")
    if smoothed.normalized:
        raise ValueError("degenerate start is judged on the raw moving average")
    return bool(smoothed.means[0] <= tolerance * tick_size)


# ----------------------------------------------------------------------
# scaling
# ----------------------------------------------------------------------
def fit_power_law(
    smoothed: SmoothedSeries,
    opening_duration_ms: float = 0.0,
    min_elapsed_ms: float = 10 * MS_PER_MINUTE,
    min_windows: int = 3,
) -> PowerLawFit:
    """Least-squares line through (log elapsed, log mean) after the opening.

    Only complete windows whose representative time lies beyond both the
    opening duration and ``min_elapsed_ms`` enter the fit.
    """

    cutoff = max(opening_duration_ms, min_elapsed_ms)
    keep = (~smoothed.partial) & (smoothed.elapsed_ms > cutoff) & (smoothed.means > 0)
    if int(keep.sum()) < min_windows:
        raise StatisticUnavailableError(
            f"{int(keep.sum())} windows beyond {cutoff / MS_PER_MINUTE:.1f} min; need {min_windows}"
        )
    log_t = np.log(smoothed.elapsed_ms[keep])
    log_m = np.log(smoothed.means[keep])
    slope, intercept = np.polyfit(log_t, log_m, 1)
    residuals = log_m - (slope * log_t + intercept)
    return PowerLawFit(
        alpha=float(-slope),
        prefactor=float(np.exp(intercept)),
        fit_range_ms=(float(smoothed.elapsed_ms[keep][0]), float(smoothed.elapsed_ms[keep][-1])),
        residual=float(np.sqrt(np.mean(residuals**2))),
        n_windows=int(keep.sum()),
    )


def terminal_ratio(smoothed: SmoothedSeries) -> float:
    """Normalized moving average extrapolated to the close.

    Uses the straight line in log-log through the last two complete windows.
    For an ideal power law this approaches ``1 - alpha``.
    """

    if not smoothed.normalized:
        raise ValueError("terminal ratio needs the normalized moving average")
    keep = (~smoothed.partial) & (smoothed.means > 0)
    t = smoothed.elapsed_ms[keep]
    m = smoothed.means[keep]
    if t.size < 2:
        raise StatisticUnavailableError("fewer than two complete windows")
    (t1, t2), (m1, m2) = t[-2:], m[-2:]
    slope = np.log(m2 / m1) / np.log(t2 / t1)
    day_ms = smoothed.te_ms - smoothed.t0_ms
    return float(m2 * (day_ms / t2) ** slope)


@dataclass(frozen=True)
class CollapseReport:
    """Spread of several normalized curves around their common mean."""

    elapsed_ms: np.ndarray
    mean: np.ndarray
    coefficient_of_variation: np.ndarray

    @property
    def max_cv(self) -> float:
        return float(np.max(self.coefficient_of_variation))


def collapse_spread(curves: Sequence[SmoothedSeries], n_points: int = 20) -> CollapseReport:
    """Compare normalized curves at shared log-spaced elapsed times."""

    if len(curves) < 2:
        raise StatisticUnavailableError("collapse needs at least two curves")
    complete = [curve.complete() for curve in curves]
    if any(not curve.normalized for curve in complete):
        raise ValueError("collapse compares normalized curves")
    if any(len(curve) < 2 for curve in complete):
        raise StatisticUnavailableError("every curve needs two complete windows")
    lo = max(float(curve.elapsed_ms[0]) for curve in complete)
    hi = min(float(curve.elapsed_ms[-1]) for curve in complete)
    if lo >= hi:
        raise StatisticUnavailableError("curves share no elapsed-time range")
    grid = np.logspace(np.log10(lo), np.log10(hi), n_points)
    values = np.vstack(
        [
            np.exp(np.interp(np.log(grid), np.log(curve.elapsed_ms), np.log(curve.means)))
            for curve in complete
        ]
    )
    centre = values.mean(axis=0)
    return CollapseReport(grid, centre, values.std(axis=0) / centre)


# ----------------------------------------------------------------------
# opening vs rest of day
# ----------------------------------------------------------------------
def comparison_intervals(
    duration_ms: float,
    bounds: TradingDayBounds = TradingDayBounds(),
    noon_ms: int = NOON_MS,
    two_pm_ms: int = TWO_PM_MS,
) -> List[ComparisonInterval]:
    """Three intervals of length T: the opening, from noon, and from 2 pm."""

    if duration_ms <= 0:
        raise StatisticUnavailableError("opening duration is zero; no comparison intervals")
    length = int(round(duration_ms))
    intervals = []
    for tag, start in (
        (IntervalTag.OPENING, bounds.t0_ms),
        (IntervalTag.NOON, noon_ms),
        (IntervalTag.TWO_PM, two_pm_ms),
    ):
        end = start + length
        clamped = end > bounds.te_ms
        if clamped:
            LOGGER.info("Clamping %s interval at the close", tag.value)
            end = bounds.te_ms
        intervals.append(ComparisonInterval(tag, start, end, clamped))
    return intervals


class MidpointSampler:
    """Last-known midpoint at arbitrary times, from a quote-change stream."""

    def __init__(self, times_ms: np.ndarray, midpoints: np.ndarray):
        self.times_ms = np.asarray(times_ms, dtype=np.int64)
        self.midpoints = np.asarray(midpoints, dtype=np.float64)

    @classmethod
    def from_quotes(cls, quotes: Iterable[Quote]) -> "MidpointSampler":
        times: List[int] = []
        mids: List[float] = []
        for quote in quotes:
            times.append(quote.time_ms)
            if quote.is_two_sided:
                mids.append((quote.best_bid + quote.best_ask) / 2)  # type: ignore[operator]
            else:
                mids.append(np.nan)
        return cls(np.array(times, dtype=np.int64), np.array(mids, dtype=np.float64))

    def at(self, times_ms: Sequence[int] | np.ndarray) -> np.ndarray:
        """Midpoints at ``times_ms``; NaN where no two-sided quote is known."""

        query = np.asarray(times_ms, dtype=np.int64)
        index = np.searchsorted(self.times_ms, query, side="right") - 1
        values = np.full(query.shape, np.nan)
        known = index >= 0
        values[known] = self.midpoints[index[known]]
        return values


def volatility(
    sampler: MidpointSampler, interval: ComparisonInterval, step_ms: int = RETURN_STEP_MS
) -> VolatilityReport:
    """Standard deviation of non-overlapping one-minute midpoint returns."""

    length = interval.end_ms - interval.start_ms
    if length < 2 * step_ms:
        raise StatisticUnavailableError(f"{interval.tag.value} interval shorter than two return steps")
    grid = np.arange(interval.start_ms, interval.end_ms + 1, step_ms)
    mids = sampler.at(grid)
    before, after = mids[:-1], mids[1:]
    usable = np.isfinite(before) & np.isfinite(after) & (before != 0)
    returns = (after[usable] - before[usable]) / before[usable]
    skipped = int((~usable).sum())
    if returns.size < 2:
        raise StatisticUnavailableError(f"{returns.size} usable returns in {interval.tag.value} interval")
    sigma = float(np.std(returns))
    return VolatilityReport(interval.tag, sigma, int(returns.size), skipped)


def in_spread_share(
    events: EventColumns | Sequence[MarketEvent],
    quotes: Sequence[Quote],
    interval: ComparisonInterval | Tuple[int, int],
) -> float:
    """Share of submissions priced strictly inside the quotes in ``[start, end)``.

    The quote in force before each submission is the last quote change with a
    smaller sequence number.
    """

    if isinstance(interval, ComparisonInterval):
        start, end = interval.start_ms, interval.end_ms
    else:
        start, end = interval
    columns = events if isinstance(events, EventColumns) else EventColumns.from_events(events)
    submitted = (
        (columns.kind == EventKind.SUBMIT.value) & (columns.time_ms >= start) & (columns.time_ms < end)
    )
    total = int(np.count_nonzero(submitted))
    if total == 0:
        raise StatisticUnavailableError("no submissions in interval")

    quote_seq = np.fromiter((quote.seq for quote in quotes), dtype=np.int64, count=len(quotes))
    bids = np.array([np.nan if q.best_bid is None else q.best_bid for q in quotes] + [np.nan])
    asks = np.array([np.nan if q.best_ask is None else q.best_ask for q in quotes] + [np.nan])
    # -1 (no quote yet) picks the trailing NaN.
    in_force = np.searchsorted(quote_seq, columns.seq[submitted], side="left") - 1
    prices = columns.price[submitted].astype(np.float64)
    inside = (bids[in_force] < prices) & (prices < asks[in_force])
    return int(np.count_nonzero(inside)) / total


# ----------------------------------------------------------------------
# distributions
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class Histogram:
    edges: np.ndarray
    densities: Dict[str, np.ndarray]
    counts: Dict[str, np.ndarray]

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)

    def area(self, group: str) -> float:
        return float(np.sum(self.densities[group] * self.widths))


def duration_pdf(groups: Mapping[str, Sequence[float]], n_bins: int = 20) -> Histogram:
    """Log-binned density of opening durations, total plus stacked sub-populations.

    The ``all`` density integrates to one; each group is scaled by its share
    of the population so that the groups add up to the total.
    """

    arrays = {name: np.asarray(values, dtype=np.float64) for name, values in groups.items()}
    excluded = sum(int((a <= 0).sum()) for a in arrays.values())
    if excluded:
        LOGGER.info("Leaving %s zero durations out of the log-binned density", excluded)
    arrays = {name: a[a > 0] for name, a in arrays.items()}
    pooled = np.concatenate(list(arrays.values())) if arrays else np.empty(0)
    if pooled.size == 0:
        raise StatisticUnavailableError("no positive durations")
    lo, hi = float(pooled.min()), float(pooled.max())
    if lo == hi:
        edges = np.array([lo / 1.1, lo * 1.1])
    else:
        edges = np.logspace(np.log10(lo), np.log10(hi), n_bins + 1)
        edges[0], edges[-1] = lo, hi
    widths = np.diff(edges)
    counts = {name: np.histogram(a, bins=edges)[0] for name, a in sorted(arrays.items())}
    counts["all"] = np.histogram(pooled, bins=edges)[0]
    densities = {name: c / (pooled.size * widths) for name, c in counts.items()}
    return Histogram(edges, densities, counts)


def value_pdf(groups: Mapping[str, Sequence[float]], bins: int | str = "fd") -> Histogram:
    """Linear-binned densities on shared edges, each group normalized on its own."""

    arrays = {
        name: np.asarray([v for v in values if v is not None and np.isfinite(v)], dtype=np.float64)
        for name, values in groups.items()
    }
    pooled = np.concatenate(list(arrays.values())) if arrays else np.empty(0)
    if pooled.size == 0:
        raise StatisticUnavailableError("no values")
    edges = np.histogram_bin_edges(pooled, bins=bins)
    widths = np.diff(edges)
    counts = {}
    densities = {}
    for name, a in arrays.items():
        c = np.histogram(a, bins=edges)[0]
        counts[name] = c
        densities[name] = c / (a.size * widths) if a.size else np.zeros_like(widths)
    return Histogram(edges, densities, counts)


# ----------------------------------------------------------------------
# cross-day aggregation
# ----------------------------------------------------------------------
def aggregate(
    reports: Iterable[StockDayReport],
    tick_size: float,
    small_spread_ticks: float = 1.15,
) -> List[StockSummary]:
    """Per-ticker mean opening duration and the quotient Q of largest to smallest."""

    by_ticker: Dict[str, List[StockDayReport]] = defaultdict(list)
    for report in reports:
        by_ticker[report.ticker].append(report)

    summaries: List[StockSummary] = []
    for ticker in sorted(by_ticker):
        days = by_ticker[ticker]
        valid = [r for r in days if r.opening is not None and not r.degenerate_start]
        if not valid:
            LOGGER.info("Excluding %s: no valid days", ticker)
            continue
        flags: List[str] = []
        durations = [r.opening.duration_ms for r in valid if r.opening.status is OpeningStatus.OK]  # type: ignore[union-attr]
        mean_duration = float(np.mean(durations)) if durations else None
        quotient: Optional[float] = None
        if any(r.opening.status is OpeningStatus.NEVER_ABOVE for r in valid):  # type: ignore[union-attr]
            flags.append("zero-duration-day")
        elif durations and min(durations) > 0:
            quotient = max(durations) / min(durations)
        if len(valid) < len(days):
            flags.append("days-excluded")

        labels = [r.tick_class.label for r in valid if r.tick_class is not None]
        label: Optional[TickLabel] = None
        if labels:
            large = labels.count(TickLabel.LARGE)
            label = TickLabel.LARGE if large >= len(labels) - large else TickLabel.SMALL

        spreads = [r.mean_spread for r in days if r.mean_spread is not None]
        average_spread = float(np.mean(spreads)) if spreads else None
        small = average_spread is not None and average_spread < small_spread_ticks * tick_size
        summaries.append(
            StockSummary(
                ticker=ticker,
                n_days=len(valid),
                mean_duration_ms=mean_duration,
                quotient=quotient,
                tick_label=label,
                mean_spread=average_spread,
                small_spread=small,
                flags=tuple(flags),
            )
        )
    return summaries
