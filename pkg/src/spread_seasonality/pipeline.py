"""One stock-day end to end: replay, extract, smooth, analyze."""
from __future__ import annotations

import logging
import re
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, List, Optional, Sequence, Tuple

try:  # pragma: no cover - optional dependency setup
    from tqdm import tqdm
except ModuleNotFoundError:  # pragma: no cover - degrade gracefully
    def tqdm(iterable, **_kwargs):  # type: ignore[no-redef]
        return iterable

from .analysis import (
    CollapseReport,
    MidpointSampler,
    classify_tick,
    collapse_spread,
    comparison_intervals,
    detect_degenerate_start,
    detect_opening,
    fit_power_law,
    in_spread_share,
    terminal_ratio,
    volatility,
)
from .book import OrderBook
from .config import RunConfig
from .errors import (
    DegenerateDayError,
    InsufficientDataError,
    SpreadSeasonalityError,
    StatisticUnavailableError,
)
from .ingest import EventFileFormat, clip_to_trading_hours, read_event_columns
from .models import EventColumns, MarketEvent, OpeningStatus, Quote, Scheme, StockDayReport
from .series import SpreadSeries, extract_spread_changes, mean_spread
from .smooth import SmoothedSeries, layout_windows, normalize, smooth

LOGGER = logging.getLogger(__name__)

STOCK_DAY_PATTERN = re.compile(r"^(?P<ticker>[A-Za-z][A-Za-z0-9.]*)_(?P<day>\d{4}-\d{2}-\d{2})")


@dataclass
class StockDayResult:
    """A report plus the intermediate series needed for plot exports."""

    report: StockDayReport
    source: Optional[Path] = None
    series: Optional[SpreadSeries] = None
    doubling: Optional[SmoothedSeries] = None
    overlap: Optional[SmoothedSeries] = None
    integrity_errors: List[str] = field(default_factory=list)
    error: Optional[str] = None

    @property
    def sort_key(self) -> Tuple[str, str, str]:
        return (self.report.ticker, self.report.day, str(self.source or ""))


def identify_stock_day(path: str | Path) -> Tuple[str, str]:
    """Ticker and day from names like ``AAPL_2016-03-01_...``; otherwise the file stem."""

    stem = Path(path).name.split(".")[0]
    match = STOCK_DAY_PATTERN.match(Path(path).name)
    if match:
        return match.group("ticker").upper(), match.group("day")
    return stem, ""


def _add_flag(report: StockDayReport, flag: str) -> None:
    if flag not in report.flags:
        report.flags.append(flag)


def replay_day(events: EventColumns, config: RunConfig) -> Tuple[List[Quote], EventColumns, OrderBook, bool]:
    """Replay pre-market and in-hours events.

    Returns every quote change, the in-hours events, the final book and
    whether the book was two-sided at the open.
    """

    pre_market, in_hours = clip_to_trading_hours(events, config.bounds)
    book = OrderBook(strict=config.strict)
    quotes = list(book.replay(pre_market))
    two_sided_at_open = book.quote(config.bounds.t0_ms).is_two_sided
    quotes.extend(book.replay(in_hours))
    return quotes, in_hours, book, two_sided_at_open


def analyze_events(
    events: EventColumns | Sequence[MarketEvent], ticker: str, day: str, config: RunConfig = RunConfig()
) -> StockDayResult:
    """Full analysis of one stock-day; unavailable statistics become ``None`` plus a flag."""

    if not isinstance(events, EventColumns):
        events = EventColumns.from_events(events)

    report = StockDayReport(
        ticker=ticker,
        day=day,
        mean_spread=None,
        mean_method=config.mean_method,
        tick_size=config.tick_size,
        n_events=len(events),
        t_rep_rule=config.t_rep_rule,
        window_weighting=config.window_weighting,
    )
    result = StockDayResult(report)
    label = f"{ticker} {day}".strip()

    quotes, _in_hours, book, two_sided_at_open = replay_day(events, config)
    if book.integrity_error_count:
        LOGGER.warning("%s: %s book integrity errors skipped", label, book.integrity_error_count)
        result.integrity_errors = list(book.integrity_errors)
        _add_flag(report, "integrity-errors")
    if book.crossed:
        _add_flag(report, "crossed-book")
    if not two_sided_at_open:
        _add_flag(report, "one-sided-at-open")

    try:
        series = extract_spread_changes(quotes, config.bounds)
    except DegenerateDayError as exc:
        LOGGER.warning("%s: degenerate day (%s)", label, exc)
        _add_flag(report, "degenerate-day")
        return result
    result.series = series
    report.n_observations = len(series)
    for flag in series.quality.flags:
        _add_flag(report, flag)

    mean = mean_spread(series, config.mean_method)
    report.mean_spread = mean.value

    try:
        doubling = smooth(
            series,
            layout_windows(len(series), Scheme.GEOMETRIC_DOUBLING),
            config.t_rep_rule,
            config.window_weighting,
            label,
        )
        overlap = smooth(
            series,
            layout_windows(len(series), Scheme.OVERLAP_11),
            config.t_rep_rule,
            config.window_weighting,
            label,
        )
    except InsufficientDataError as exc:
        LOGGER.warning("%s: %s", label, exc)
        _add_flag(report, "insufficient-data")
        return result
    if len(doubling) == 0 or len(overlap) == 0:
        LOGGER.warning("%s: no usable smoothing windows", label)
        _add_flag(report, "degenerate-day")
        return result
    result.doubling, result.overlap = doubling, overlap

    report.degenerate_start = detect_degenerate_start(doubling, config.tick_size, config.degenerate_tolerance)
    if report.degenerate_start:
        LOGGER.info("%s: spread already at one tick at the open", label)
        _add_flag(report, "degenerate-start")
    report.tick_class = classify_tick(
        doubling,
        config.tick_size,
        mean,
        config.tick_criterion,
        config.saturation_tolerance,
        config.large_tick_mean_ticks,
    )
    report.opening = detect_opening(overlap, mean, config.threshold_factor)
    if report.opening.status is not OpeningStatus.OK:
        _add_flag(report, f"opening-{report.opening.status.value}")

    normalized = normalize(doubling, mean)
    try:
        report.power_law = fit_power_law(normalized, report.opening.duration_ms, config.min_fit_elapsed_ms)
    except StatisticUnavailableError as exc:
        LOGGER.info("%s: power-law fit unavailable (%s)", label, exc)
        _add_flag(report, "fit-unavailable")
    try:
        report.terminal_ratio = terminal_ratio(normalized)
    except StatisticUnavailableError as exc:
        LOGGER.info("%s: terminal ratio unavailable (%s)", label, exc)
        _add_flag(report, "terminal-ratio-unavailable")

    _compare_intervals(report, events, quotes, config, label)
    return result


def _compare_intervals(
    report: StockDayReport,
    events: EventColumns,
    quotes: Sequence[Quote],
    config: RunConfig,
    label: str,
) -> None:
    try:
        intervals = comparison_intervals(report.opening.duration_ms, config.bounds)  # type: ignore[union-attr]
    except StatisticUnavailableError as exc:
        LOGGER.info("%s: %s", label, exc)
        _add_flag(report, "no-comparison-intervals")
        return
    if any(interval.clamped for interval in intervals):
        _add_flag(report, "interval-clamped")
    sampler = MidpointSampler.from_quotes(quotes)
    for interval in intervals:
        tag = interval.tag.value
        try:
            report.volatility[tag] = volatility(sampler, interval)
        except StatisticUnavailableError as exc:
            LOGGER.info("%s: volatility unavailable (%s)", label, exc)
            report.volatility[tag] = None
            _add_flag(report, f"volatility-unavailable-{tag}")
        try:
            report.in_spread_share[tag] = in_spread_share(events, quotes, interval)
        except StatisticUnavailableError as exc:
            LOGGER.info("%s: in-spread share unavailable (%s)", label, exc)
            report.in_spread_share[tag] = None
            _add_flag(report, f"in-spread-unavailable-{tag}")


def analyze_file(path: str | Path, config: RunConfig = RunConfig()) -> StockDayResult:
    """Parse and analyze one stock-day file.

    Parse and I/O failures are reported on the result instead of raised, so
    a batch continues past a bad file.
    """

    path = Path(path)
    ticker, day = identify_stock_day(path)
    try:
        events = read_event_columns(path, EventFileFormat(time_unit=config.time_unit))
        result = analyze_events(events, ticker, day, config)
    except (OSError, SpreadSeasonalityError) as exc:
        LOGGER.error("%s: %s", path, exc)
        report = StockDayReport(
            ticker,
            day,
            None,
            config.mean_method,
            config.tick_size,
            t_rep_rule=config.t_rep_rule,
            window_weighting=config.window_weighting,
        )
        report.flags.append("failed")
        result = StockDayResult(report, error=str(exc))
    result.source = path
    return result


def analyze_files(
    paths: Iterable[str | Path], config: RunConfig = RunConfig(), progress: bool = True
) -> List[StockDayResult]:
    """Analyze many stock-day files, serially or in worker processes.

    Results come back sorted by (ticker, day, path) whatever the worker count.
    """

    paths = [Path(path) for path in paths]
    if config.jobs > 1 and len(paths) > 1:
        with ProcessPoolExecutor(max_workers=config.jobs) as pool:
            iterator = pool.map(analyze_file, paths, [config] * len(paths))
            results = list(tqdm(iterator, total=len(paths), desc="Analyzing", disable=not progress))
    else:
        results = [analyze_file(path, config) for path in tqdm(paths, desc="Analyzing", disable=not progress)]
    return sorted(results, key=lambda result: result.sort_key)


def collapse_results(results: Sequence[StockDayResult], n_points: int = 20) -> Optional[CollapseReport]:
    """How closely the normalized doubling curves of a batch fall onto one curve.

    Days with a degenerate start or fewer than two complete windows are left
    out; ``None`` when fewer than two curves remain or they share no range.
    """

    curves = []
    for result in results:
        report = result.report
        if result.doubling is None or not report.mean_spread or report.degenerate_start:
            continue
        curve = normalize(result.doubling, report.mean_spread)
        if len(curve.complete()) >= 2:
            curves.append(curve)
    try:
        collapse = collapse_spread(curves, n_points)
    except StatisticUnavailableError as exc:
        LOGGER.info("No curve collapse: %s", exc)
        return None
    LOGGER.info("%s normalized curves collapse within %.1f%%", len(curves), 100 * collapse.max_cv)
    return collapse
