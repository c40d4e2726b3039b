"""Command line interface for spread seasonality analysis."""
from __future__ import annotations

import argparse
import json
import logging
from pathlib import Path
from typing import Dict, List, Optional, Sequence

from .analysis import aggregate, duration_pdf, value_pdf
from .book import OrderBook
from .config import RunConfig, resolve_output_dir
from .errors import IngestError, ScenarioError, SpreadSeasonalityError, StatisticUnavailableError
from .ingest import EventFileFormat, count_kinds, read_event_columns, write_event_file
from .models import (
    MS_PER_MINUTE,
    MeanMethod,
    OpeningStatus,
    StockDayReport,
    StockSummary,
    TickCriterion,
    TradingDayBounds,
    TRepRule,
)
from .pipeline import analyze_files, collapse_results, identify_stock_day
from .reports import (
    COLLAPSE_TABLE,
    STOCK_DAY_COLUMNS,
    STOCK_DAY_TABLE,
    SUMMARY_COLUMNS,
    SUMMARY_TABLE,
    load_reports,
    stock_day_row,
    summary_row,
    write_collapse_csv,
    write_histogram_csv,
    write_stock_day_outputs,
    write_stock_day_table,
    write_summary_csv,
)
from .synth import RateModel, ScenarioKind, SyntheticScenario, generate_event_stream, write_truth

try:
    from tabulate import tabulate
except ImportError:  # pragma: no cover - optional dependency
    tabulate = None

LOGGER = logging.getLogger("spread_seasonality")

EXIT_OK = 0
EXIT_PROBLEMS = 1


def configure_logging(verbose: bool) -> None:
    level = logging.DEBUG if verbose else logging.INFO
    logging.basicConfig(level=level, format="%(levelname)s: %(message)s")


def _build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--output", default=argparse.SUPPRESS, help="Output directory")
    common.add_argument(
        "--verbose", action="store_true", default=argparse.SUPPRESS, help="Enable debug logging"
    )

    replay = argparse.ArgumentParser(add_help=False)
    replay.add_argument("--time-unit", choices=["ms", "seconds"], default="ms", help="Timestamp unit of event files")
    replay.add_argument("--strict", action="store_true", help="Abort on the first book integrity error")
    replay.add_argument("--open-ms", type=int, default=TradingDayBounds().t0_ms, help="Market open, ms after midnight")
    replay.add_argument("--close-ms", type=int, default=TradingDayBounds().te_ms, help="Market close, ms after midnight")

    parser = argparse.ArgumentParser(description="Intraday bid-ask spread seasonality", parents=[common])
    subparsers = parser.add_subparsers(dest="command", required=True)

    ingest_parser = subparsers.add_parser(
        "ingest", parents=[common, replay], help="Validate an event file and replay its book"
    )
    ingest_parser.add_argument("file", help="Event file")
    ingest_parser.add_argument("--snapshot-at", type=int, help="Dump the book as JSON at this time (ms)")
    ingest_parser.add_argument("--snapshot-depth", type=int, default=10, help="Price levels per side in the snapshot")

    analyze_parser = subparsers.add_parser(
        "analyze", parents=[common, replay], help="Analyze stock-day event files"
    )
    analyze_parser.add_argument("files", nargs="+", help="Stock-day event files")
    analyze_parser.add_argument("--tick-size", type=int, default=RunConfig.tick_size, help="Tick size in price units")
    analyze_parser.add_argument(
        "--mean-method", choices=[m.value for m in MeanMethod], default=RunConfig.mean_method.value
    )
    analyze_parser.add_argument(
        "--window-weighting",
        choices=[m.value for m in MeanMethod],
        default=RunConfig.window_weighting.value,
        help="Mean inside each smoothing window",
    )
    analyze_parser.add_argument(
        "--t-rep-rule", choices=[r.value for r in TRepRule], default=RunConfig.t_rep_rule.value
    )
    analyze_parser.add_argument("--threshold-factor", type=float, default=RunConfig.threshold_factor)
    analyze_parser.add_argument("--saturation-tolerance", type=float, default=RunConfig.saturation_tolerance)
    analyze_parser.add_argument("--degenerate-tolerance", type=float, default=RunConfig.degenerate_tolerance)
    analyze_parser.add_argument("--large-tick-mean", type=float, default=RunConfig.large_tick_mean_ticks)
    analyze_parser.add_argument(
        "--tick-criterion", choices=[c.value for c in TickCriterion], default=RunConfig.tick_criterion.value
    )
    analyze_parser.add_argument(
        "--min-fit-minutes", type=float, default=RunConfig.min_fit_elapsed_ms / MS_PER_MINUTE
    )
    analyze_parser.add_argument("--jobs", type=int, default=1, help="Worker processes")
    analyze_parser.add_argument("--no-progress", action="store_true", help="Hide the progress bar")

    summarize_parser = subparsers.add_parser(
        "summarize", parents=[common], help="Aggregate reports into per-stock tables and PDFs"
    )
    summarize_parser.add_argument("reports", nargs="?", help="Report directory (defaults to the output directory)")
    summarize_parser.add_argument("--tick-size", type=int, default=RunConfig.tick_size)
    summarize_parser.add_argument("--bins", type=int, default=20, help="Log bins for duration PDFs")

    synth_parser = subparsers.add_parser(
        "synth", parents=[common], help="Generate a synthetic stock-day with ground truth"
    )
    synth_parser.add_argument("--kind", choices=[k.value for k in ScenarioKind], default=ScenarioKind.POWER_LAW_DECAY.value)
    synth_parser.add_argument("--n-changes", type=int, default=SyntheticScenario.n_changes)
    synth_parser.add_argument("--seed", type=int, default=RunConfig.seed)
    synth_parser.add_argument("--alpha", type=float, default=SyntheticScenario.alpha)
    synth_parser.add_argument("--noise", type=float, default=SyntheticScenario.noise)
    synth_parser.add_argument("--rate-model", choices=[r.value for r in RateModel], default=RateModel.POISSON.value)
    synth_parser.add_argument("--in-spread-fraction", type=float, default=SyntheticScenario.in_spread_fraction)
    synth_parser.add_argument("--ticker", default="SYN", help="Ticker used in the file name")
    synth_parser.add_argument("--day", default="2016-03-01", help="Day used in the file name")
    return parser


def _bounds(args: argparse.Namespace, parser: argparse.ArgumentParser) -> TradingDayBounds:
    try:
        return TradingDayBounds(args.open_ms, args.close_ms)
    except ValueError as exc:
        parser.error(str(exc))
        raise  # pragma: no cover


def _config_from_args(args: argparse.Namespace, parser: argparse.ArgumentParser, output_dir: Path) -> RunConfig:
    config = RunConfig(
        tick_size=args.tick_size,
        time_unit=args.time_unit,
        bounds=_bounds(args, parser),
        mean_method=MeanMethod(args.mean_method),
        window_weighting=MeanMethod(args.window_weighting),
        t_rep_rule=TRepRule(args.t_rep_rule),
        threshold_factor=args.threshold_factor,
        saturation_tolerance=args.saturation_tolerance,
        degenerate_tolerance=args.degenerate_tolerance,
        large_tick_mean_ticks=args.large_tick_mean,
        tick_criterion=TickCriterion(args.tick_criterion),
        min_fit_elapsed_ms=args.min_fit_minutes * MS_PER_MINUTE,
        strict=args.strict,
        jobs=args.jobs,
        output_dir=output_dir,
    )
    try:
        config.validate()
    except ValueError as exc:
        parser.error(str(exc))
    return config


def main(argv: Optional[list[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)

    configure_logging(bool(getattr(args, "verbose", False)))
    output_dir = resolve_output_dir(getattr(args, "output", None))

    if args.command == "ingest":
        return cmd_ingest(Path(args.file), args, _bounds(args, parser), output_dir)
    if args.command == "analyze":
        config = _config_from_args(args, parser, output_dir)
        return cmd_analyze([Path(path) for path in args.files], config, progress=not args.no_progress)
    if args.command == "summarize":
        report_dir = Path(args.reports) if args.reports else output_dir
        return cmd_summarize(report_dir, output_dir, args.tick_size, args.bins)

    scenario = SyntheticScenario(
        kind=ScenarioKind(args.kind),
        n_changes=args.n_changes,
        seed=args.seed,
        noise=args.noise,
        rate_model=RateModel(args.rate_model),
        alpha=args.alpha,
        in_spread_fraction=args.in_spread_fraction,
    )
    try:
        return cmd_synth(scenario, output_dir, args.ticker, args.day)
    except ScenarioError as exc:
        parser.error(f"invalid scenario: {exc}")
    return EXIT_PROBLEMS  # pragma: no cover


# ----------------------------------------------------------------------
# subcommands
# ----------------------------------------------------------------------
def cmd_ingest(path: Path, args: argparse.Namespace, bounds: TradingDayBounds, output_dir: Path) -> int:
    """Parse, validate and replay one file; exit 0 only if it is clean."""

    try:
        events = read_event_columns(path, EventFileFormat(time_unit=args.time_unit))
    except IngestError as exc:
        LOGGER.error("%s: %s", path, exc)
        return EXIT_PROBLEMS
    except OSError as exc:
        LOGGER.error("Cannot read %s: %s", path, exc)
        return EXIT_PROBLEMS

    book = OrderBook(strict=args.strict)
    try:
        if args.snapshot_at is None:
            book.apply_all(events)
        else:
            before, after = events.split_at(args.snapshot_at + 1)
            book.apply_all(before)
            _dump_snapshot(book, path, args.snapshot_at, args.snapshot_depth, output_dir)
            book.apply_all(after)
    except SpreadSeasonalityError as exc:
        LOGGER.error("%s: %s", path, exc)
        return EXIT_PROBLEMS

    _, in_hours, _ = events.split_at(bounds.t0_ms, bounds.te_ms + 1)
    print(f"{len(events)} events, {book.integrity_error_count} errors")
    rows = [[kind.name.lower(), count] for kind, count in count_kinds(events).items()]
    rows.append(["in trading hours", len(in_hours)])
    _print_table(rows, ["Kind", "Count"])
    for message in book.integrity_errors:
        print(f"  {message}")
    if book.crossed:
        LOGGER.warning("%s: book was crossed or locked at least once", path)
    return EXIT_OK if book.integrity_error_count == 0 else EXIT_PROBLEMS


def _dump_snapshot(book: OrderBook, source: Path, time_ms: int, depth: int, output_dir: Path) -> Path:
    ticker, day = identify_stock_day(source)
    stem = f"{ticker}_{day}" if day else ticker
    target = output_dir / "snapshots" / f"{stem}_{time_ms}.json"
    target.parent.mkdir(parents=True, exist_ok=True)
    book.dump_snapshot(target, time_ms, depth)
    LOGGER.info("Book snapshot written to %s", target)
    return target


def cmd_analyze(files: Sequence[Path], config: RunConfig, progress: bool = True) -> int:
    """Analyze stock-day files and write reports, plot data and a table."""

    output_dir = config.output_dir or resolve_output_dir(None)
    results = analyze_files(files, config, progress=progress)
    for result in results:
        write_stock_day_outputs(result, output_dir)
    reports = [result.report for result in results]
    write_stock_day_table(reports, output_dir / STOCK_DAY_TABLE)
    collapse = collapse_results(results)
    if collapse is not None:
        write_collapse_csv(collapse, output_dir / COLLAPSE_TABLE)
    _print_table([stock_day_row(report)[:7] for report in reports], STOCK_DAY_COLUMNS[:7])
    LOGGER.info("Reports written to %s", output_dir)
    failed = [result for result in results if result.error is not None]
    return EXIT_OK if not failed else EXIT_PROBLEMS


def cmd_summarize(report_dir: Path, output_dir: Path, tick_size: int, n_bins: int = 20) -> int:
    """Per-stock table plus duration, volatility and in-spread PDFs."""

    reports = load_reports(report_dir)
    if not reports:
        LOGGER.error("No reports found in %s", report_dir)
        return EXIT_PROBLEMS
    summaries = aggregate(reports, tick_size)
    write_summary_csv(summaries, output_dir / SUMMARY_TABLE)
    _print_table([summary_row(summary) for summary in summaries], SUMMARY_COLUMNS)

    groups = {summary.ticker: _spread_group(summary) for summary in summaries}
    daily: Dict[str, List[float]] = {}
    averaged: Dict[str, List[float]] = {}
    for report in reports:
        if report.ticker in groups and _counts_towards_duration(report):
            daily.setdefault(groups[report.ticker], []).append(report.opening.duration_ms)  # type: ignore[union-attr]
    for summary in summaries:
        if summary.mean_duration_ms is not None:
            averaged.setdefault(groups[summary.ticker], []).append(summary.mean_duration_ms)

    volatilities: Dict[str, List[float]] = {}
    shares: Dict[str, List[float]] = {}
    for report in reports:
        for tag, entry in report.volatility.items():
            if entry is not None:
                volatilities.setdefault(tag, []).append(entry.sigma)
        for tag, share in report.in_spread_share.items():
            if share is not None:
                shares.setdefault(tag, []).append(share)

    exports = (
        ("duration_pdf_daily.csv", lambda: duration_pdf(daily, n_bins)),
        ("duration_pdf_mean.csv", lambda: duration_pdf(averaged, n_bins)),
        ("volatility_pdf.csv", lambda: value_pdf(volatilities)),
        ("in_spread_pdf.csv", lambda: value_pdf(shares)),
    )
    for name, build in exports:
        try:
            write_histogram_csv(build(), output_dir / name)
        except StatisticUnavailableError as exc:
            LOGGER.info("Skipping %s: %s", name, exc)
    LOGGER.info("Summary written to %s", output_dir)
    return EXIT_OK


def _spread_group(summary: StockSummary) -> str:
    return "small-spread" if summary.small_spread else "other"


def _counts_towards_duration(report: StockDayReport) -> bool:
    return (
        report.opening is not None
        and report.opening.status is OpeningStatus.OK
        and not report.degenerate_start
    )


def cmd_synth(scenario: SyntheticScenario, output_dir: Path, ticker: str, day: str) -> int:
    """Write a synthetic event file and its ground-truth sidecar."""

    events, truth = generate_event_stream(scenario)
    stem = f"{ticker}_{day}_{scenario.kind.value}_seed{scenario.seed}"
    event_path = output_dir / "synthetic" / f"{stem}.csv"
    truth_path = output_dir / "synthetic" / f"{stem}.truth.json"
    write_event_file(events, event_path)
    write_truth(truth, truth_path)
    print(event_path)
    LOGGER.info("%s events, %s spread changes, truth in %s", len(events), truth.n_observations, truth_path)
    return EXIT_OK


def _print_table(rows: list[list], headers: Sequence[str]) -> None:
    if not rows:
        print("No rows")
        return
    if tabulate:
        print(tabulate(rows, headers=list(headers)))
    else:
        print(json.dumps(dict(headers=list(headers), rows=rows), indent=2))


if __name__ == "__main__":  # pragma: no cover
    raise SystemExit(main())
