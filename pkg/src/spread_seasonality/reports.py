"""CSV and JSON persistence for reports, summaries, histograms and plot data."""
from __future__ import annotations

import csv
import json
import logging
from dataclasses import asdict
from pathlib import Path
from typing import Any, Dict, Iterable, List, Optional, Sequence

from .analysis import CollapseReport, Histogram
from .models import (
    MS_PER_MINUTE,
    IntervalTag,
    MeanMethod,
    OpeningResult,
    OpeningStatus,
    PowerLawFit,
    StockDayReport,
    StockSummary,
    TickClass,
    TickCriterion,
    TickLabel,
    TRepRule,
    VolatilityReport,
)
from .pipeline import StockDayResult
from .series import write_series_csv
from .smooth import write_smoothed_csv

LOGGER = logging.getLogger(__name__)

REPORTS_DIR = "reports"
SERIES_DIR = "series"
SMOOTHED_DIR = "smoothed"
STOCK_DAY_TABLE = "stock_days.csv"
SUMMARY_TABLE = "summary.csv"
COLLAPSE_TABLE = "collapse.csv"

TAGS = [tag.value for tag in IntervalTag]

STOCK_DAY_COLUMNS = (
    ["ticker", "day", "mean_spread", "n_events", "n_observations", "opening_status", "opening_minutes"]
    + ["tick_class", "degenerate_start", "alpha", "one_minus_alpha", "terminal_ratio"]
    + [f"sigma_{tag}" for tag in TAGS]
    + [f"in_spread_{tag}" for tag in TAGS]
    + ["flags"]
)
SUMMARY_COLUMNS = [
    "ticker",
    "n_days",
    "mean_duration_minutes",
    "quotient",
    "tick_class",
    "mean_spread",
    "small_spread",
    "flags",
]


def stock_day_stem(report: StockDayReport) -> str:
    return f"{report.ticker}_{report.day}" if report.day else report.ticker


# ----------------------------------------------------------------------
# stock-day reports
# ----------------------------------------------------------------------
def report_to_dict(report: StockDayReport) -> Dict[str, Any]:
    payload = asdict(report)
    payload["mean_method"] = report.mean_method.value
    payload["t_rep_rule"] = report.t_rep_rule.value
    payload["window_weighting"] = report.window_weighting.value
    if report.opening is not None:
        payload["opening"]["status"] = report.opening.status.value
    if report.tick_class is not None:
        payload["tick_class"]["label"] = report.tick_class.label.value
        payload["tick_class"]["criterion"] = report.tick_class.criterion.value
    if report.power_law is not None:
        payload["power_law"]["fit_range_ms"] = list(report.power_law.fit_range_ms)
        payload["power_law"]["one_minus_alpha"] = 1.0 - report.power_law.alpha
    for tag, entry in payload["volatility"].items():
        if entry is not None:
            entry["tag"] = tag
    return payload


def report_from_dict(payload: Dict[str, Any]) -> StockDayReport:
    opening = payload.get("opening")
    tick_class = payload.get("tick_class")
    power_law = payload.get("power_law")
    volatility: Dict[str, Optional[VolatilityReport]] = {}
    for tag, entry in (payload.get("volatility") or {}).items():
        volatility[tag] = (
            None
            if entry is None
            else VolatilityReport(IntervalTag(entry["tag"]), entry["sigma"], entry["n_returns"], entry.get("n_skipped", 0))
        )
    return StockDayReport(
        ticker=payload["ticker"],
        day=payload["day"],
        mean_spread=payload.get("mean_spread"),
        mean_method=MeanMethod(payload["mean_method"]),
        tick_size=payload["tick_size"],
        n_events=payload.get("n_events", 0),
        n_observations=payload.get("n_observations", 0),
        opening=None
        if opening is None
        else OpeningResult(opening["t1_ms"], opening["duration_ms"], OpeningStatus(opening["status"]), opening["threshold"]),
        tick_class=None
        if tick_class is None
        else TickClass(TickLabel(tick_class["label"]), TickCriterion(tick_class["criterion"]), tick_class["tolerance_ticks"]),
        degenerate_start=payload.get("degenerate_start", False),
        power_law=None
        if power_law is None
        else PowerLawFit(
            power_law["alpha"],
            power_law["prefactor"],
            tuple(power_law["fit_range_ms"]),  # type: ignore[arg-type]
            power_law["residual"],
            power_law["n_windows"],
        ),
        terminal_ratio=payload.get("terminal_ratio"),
        t_rep_rule=TRepRule(payload.get("t_rep_rule", TRepRule.GEOMETRIC.value)),
        window_weighting=MeanMethod(payload.get("window_weighting", MeanMethod.TIME_WEIGHTED.value)),
        volatility=volatility,
        in_spread_share=dict(payload.get("in_spread_share") or {}),
        flags=list(payload.get("flags") or []),
    )


def write_report_json(report: StockDayReport, path: str | Path) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(report_to_dict(report), indent=2, sort_keys=True) + "\n", encoding="utf-8")


def load_reports(directory: str | Path) -> List[StockDayReport]:
    """Read every report JSON below ``directory`` (or its ``reports`` subdirectory)."""

    directory = Path(directory)
    nested = directory / REPORTS_DIR
    if nested.is_dir():
        directory = nested
    reports = []
    for path in sorted(directory.glob("*.json")):
        reports.append(report_from_dict(json.loads(path.read_text(encoding="utf-8"))))
    LOGGER.debug("Loaded %s reports from %s", len(reports), directory)
    return reports


def write_stock_day_outputs(result: StockDayResult, output_dir: str | Path) -> Path:
    """Report JSON plus spread and smoothed-series CSVs for one analyzed stock-day."""

    output_dir = Path(output_dir)
    report = result.report
    stem = stock_day_stem(report)
    report_path = output_dir / REPORTS_DIR / f"{stem}.json"
    write_report_json(report, report_path)
    if result.series is not None:
        (output_dir / SERIES_DIR).mkdir(parents=True, exist_ok=True)
        write_series_csv(result.series, output_dir / SERIES_DIR / f"{stem}.csv")
    for name, smoothed in (("doubling", result.doubling), ("overlap", result.overlap)):
        if smoothed is not None:
            (output_dir / SMOOTHED_DIR).mkdir(parents=True, exist_ok=True)
            write_smoothed_csv(smoothed, output_dir / SMOOTHED_DIR / f"{stem}_{name}.csv", report.mean_spread)
    return report_path


# ----------------------------------------------------------------------
# tables
# ----------------------------------------------------------------------
def _cell(value: Any) -> Any:
    if value is None:
        return ""
    if isinstance(value, bool):
        return int(value)
    if isinstance(value, float):
        return repr(value)
    return value


def stock_day_row(report: StockDayReport) -> List[Any]:
    opening = report.opening
    alpha = report.power_law.alpha if report.power_law is not None else None
    row = [
        report.ticker,
        report.day,
        report.mean_spread,
        report.n_events,
        report.n_observations,
        opening.status.value if opening is not None else None,
        opening.duration_minutes if opening is not None else None,
        report.tick_class.label.value if report.tick_class is not None else None,
        report.degenerate_start,
        alpha,
        1.0 - alpha if alpha is not None else None,
        report.terminal_ratio,
    ]
    for tag in TAGS:
        entry = report.volatility.get(tag)
        row.append(entry.sigma if entry is not None else None)
    for tag in TAGS:
        row.append(report.in_spread_share.get(tag))
    row.append(";".join(report.flags))
    return [_cell(value) for value in row]


def summary_row(summary: StockSummary) -> List[Any]:
    minutes = summary.mean_duration_ms / MS_PER_MINUTE if summary.mean_duration_ms is not None else None
    row = [
        summary.ticker,
        summary.n_days,
        minutes,
        summary.quotient,
        summary.tick_label.value if summary.tick_label is not None else None,
        summary.mean_spread,
        summary.small_spread,
        ";".join(summary.flags),
    ]
    return [_cell(value) for value in row]


def _write_rows(path: str | Path, header: Sequence[str], rows: Iterable[Sequence[Any]]) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        writer.writerows(rows)


def write_stock_day_table(reports: Iterable[StockDayReport], path: str | Path) -> None:
    _write_rows(path, STOCK_DAY_COLUMNS, (stock_day_row(report) for report in reports))


def write_summary_csv(summaries: Iterable[StockSummary], path: str | Path) -> None:
    _write_rows(path, SUMMARY_COLUMNS, (summary_row(summary) for summary in summaries))


def write_histogram_csv(histogram: Histogram, path: str | Path) -> None:
    """One row per (group, bin): bin_left, bin_right, density, group."""

    edges = histogram.edges.tolist()
    rows = []
    for group in sorted(histogram.densities):
        for left, right, density in zip(edges[:-1], edges[1:], histogram.densities[group].tolist()):
            rows.append([repr(left), repr(right), repr(density), group])
    _write_rows(path, ["bin_left", "bin_right", "density", "group"], rows)


def write_collapse_csv(collapse: CollapseReport, path: str | Path) -> None:
    """Common elapsed grid with the mean normalized curve and its coefficient of variation."""

    rows = zip(
        collapse.elapsed_ms.tolist(), collapse.mean.tolist(), collapse.coefficient_of_variation.tolist()
    )
    _write_rows(path, ["elapsed_ms", "mean_normalized", "cv"], ([repr(a), repr(b), repr(c)] for a, b, c in rows))
