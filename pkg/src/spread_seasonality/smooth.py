"""Moving averages over blocks of spread changes.

Two window layouts are supported. Geometric doubling uses contiguous windows
of 64, 64, 128, 256, ... observations. The overlapping layout keeps the first
two windows and then scales both bounds of the second window by successive
powers of 1.1, clamping the end at the last observation while the window
still covers a quarter of the series.
"""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, replace
from fractions import Fraction
from pathlib import Path
from typing import List, Optional, Tuple, Union

import numpy as np

from .errors import DegenerateDayError, InsufficientDataError
from .models import MeanMethod, Scheme, TRepRule
from .series import DailyAverageSpread, SpreadSeries

LOGGER = logging.getLogger(__name__)

FIRST_WINDOW = 64
OVERLAP_FACTOR = Fraction(11, 10)
# Elapsed times are floored at 1 ms so log-axis coordinates stay finite.
MIN_ELAPSED_MS = 1.0


@dataclass(frozen=True)
class Window:
    """Observation indices, 1-based and inclusive."""

    start: int
    end: int
    partial: bool = False

    @property
    def size(self) -> int:
        return self.end - self.start + 1


@dataclass(frozen=True)
class WindowSpec:
    scheme: Scheme
    n_observations: int
    windows: Tuple[Window, ...]

    @property
    def bounds(self) -> List[Tuple[int, int]]:
        return [(window.start, window.end) for window in self.windows]


def _round_half_away(value: Fraction) -> int:
    if value < 0:
        return -_round_half_away(-value)
    return int(value + Fraction(1, 2))


def _doubling_windows(n: int) -> List[Window]:
    windows = [Window(1, FIRST_WINDOW)]
    start = FIRST_WINDOW + 1
    span = FIRST_WINDOW
    while start <= n:
        nominal_end = start + span - 1
        end = min(nominal_end, n)
        if end < nominal_end and end - start + 1 < 2:
            break
        windows.append(Window(start, end, partial=end < nominal_end))
        start = end + 1
        span *= 2
    return windows


def _overlap_windows(n: int) -> List[Window]:
    windows = [Window(1, FIRST_WINDOW)]
    step = 0
    while True:
        scale = OVERLAP_FACTOR**step
        if step == 0:
            start, end = FIRST_WINDOW + 1, 2 * FIRST_WINDOW
        else:
            start = _round_half_away(scale * FIRST_WINDOW)
            end = _round_half_away(scale * 2 * FIRST_WINDOW)
        if start > n:
            break
        if end > n:
            end = n
            if 4 * (end - start + 1) < n:
                break
        windows.append(Window(start, end))
        step += 1
    return windows


def layout_windows(n_observations: int, scheme: Scheme | str) -> WindowSpec:
    """Deterministic window layout over ``n_observations`` spread changes."""

    scheme = Scheme(scheme)
    if n_observations < FIRST_WINDOW:
        raise InsufficientDataError(
            f"{n_observations} spread changes; at least {FIRST_WINDOW} are required"
        )
    if scheme is Scheme.GEOMETRIC_DOUBLING:
        windows = _doubling_windows(n_observations)
    else:
        windows = _overlap_windows(n_observations)
    return WindowSpec(scheme, n_observations, tuple(windows))


@dataclass(eq=False)
class SmoothedSeries:
    """Window means with representative elapsed times (ms after the open)."""

    t0_ms: int
    te_ms: int
    scheme: Scheme
    t_rep_rule: TRepRule
    weighting: MeanMethod
    elapsed_ms: np.ndarray
    means: np.ndarray
    partial: np.ndarray
    windows: Tuple[Window, ...]
    normalized_by: Optional[float] = None

    def __len__(self) -> int:
        return int(self.means.size)

    @property
    def normalized(self) -> bool:
        return self.normalized_by is not None

    def complete(self) -> "SmoothedSeries":
        """Drop windows tagged partial."""

        keep = ~self.partial
        return replace(
            self,
            elapsed_ms=self.elapsed_ms[keep],
            means=self.means[keep],
            partial=self.partial[keep],
            windows=tuple(w for w, k in zip(self.windows, keep.tolist()) if k),
        )


def _window_sums(
    series: SpreadSeries, weighting: MeanMethod
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    values = series.spreads
    mask = values > 0
    clean = np.where(mask, values, 0.0)
    value_sums = np.concatenate(([0.0], np.cumsum(clean)))
    counts = np.concatenate(([0], np.cumsum(mask)))
    if weighting is MeanMethod.PER_CHANGE:
        return value_sums, counts, value_sums, counts.astype(np.float64)
    ends = np.append(series.times_ms[1:], series.te_ms)
    durations = np.where(mask, (ends - series.times_ms).astype(np.float64), 0.0)
    weighted = np.concatenate(([0.0], np.cumsum(clean * durations)))
    total_time = np.concatenate(([0.0], np.cumsum(durations)))
    return value_sums, counts, weighted, total_time


def smooth(
    series: SpreadSeries,
    spec: WindowSpec,
    t_rep_rule: TRepRule | str = TRepRule.GEOMETRIC,
    weighting: MeanMethod | str = MeanMethod.PER_CHANGE,
    label: str = "",
) -> SmoothedSeries:
    """Mean spread per window of ``spec``.

    With ``weighting=per-change`` each window value is the arithmetic mean of
    its observations; with ``time-weighted`` it is the mean of the
    piecewise-constant spread over the window's time span. Non-positive
    spreads never contribute; windows left empty are skipped. ``label``
    names the stock-day in log messages.
    """

    t_rep_rule = TRepRule(t_rep_rule)
    weighting = MeanMethod(weighting)
    if spec.n_observations != len(series):
        raise ValueError(
            f"window layout is for {spec.n_observations} observations, series has {len(series)}"
        )
    value_sums, counts, weighted, total_time = _window_sums(series, weighting)
    elapsed = np.maximum(series.elapsed_ms.astype(np.float64), MIN_ELAPSED_MS)

    reps: List[float] = []
    means: List[float] = []
    partial: List[bool] = []
    kept: List[Window] = []
    for window in spec.windows:
        lo, hi = window.start - 1, window.end
        count = counts[hi] - counts[lo]
        if count == 0:
            LOGGER.warning(
                "%s: skipping %s window [%s, %s], no positive spreads",
                label or "series",
                spec.scheme.value,
                window.start,
                window.end,
            )
            continue
        span = total_time[hi] - total_time[lo]
        if weighting is MeanMethod.TIME_WEIGHTED and span > 0:
            mean = (weighted[hi] - weighted[lo]) / span
        else:
            mean = (value_sums[hi] - value_sums[lo]) / count
        if t_rep_rule is TRepRule.GEOMETRIC:
            rep = float(np.sqrt(elapsed[lo] * elapsed[hi - 1]))
        else:
            rep = float(elapsed[hi - 1])
        if reps and rep <= reps[-1]:
            LOGGER.debug(
                "%s: dropping window [%s, %s], representative time not increasing",
                label or "series",
                window.start,
                window.end,
            )
            continue
        reps.append(rep)
        means.append(float(mean))
        partial.append(window.partial)
        kept.append(window)

    return SmoothedSeries(
        t0_ms=series.t0_ms,
        te_ms=series.te_ms,
        scheme=spec.scheme,
        t_rep_rule=t_rep_rule,
        weighting=weighting,
        elapsed_ms=np.array(reps, dtype=np.float64),
        means=np.array(means, dtype=np.float64),
        partial=np.array(partial, dtype=bool),
        windows=tuple(kept),
    )


def normalize(smoothed: SmoothedSeries, mean: Union[DailyAverageSpread, float]) -> SmoothedSeries:
    """Divide every window mean by the daily average spread."""

    value = mean.value if isinstance(mean, DailyAverageSpread) else float(mean)
    if value <= 0:
        raise DegenerateDayError(f"cannot normalize by non-positive average spread {value}")
    if smoothed.normalized:
        raise ValueError("series is already normalized")
    return replace(smoothed, means=smoothed.means / value, normalized_by=value)


def write_smoothed_csv(smoothed: SmoothedSeries, path: str | Path, mean: Optional[float] = None) -> None:
    """Plot data: elapsed time, window mean, optional normalized mean, partial marker."""

    with Path(path).open("w", encoding="utf-8", newline="") as handle:
        writer = csv.writer(handle, lineterminator="\n")
        header = ["elapsed_ms", "mean_units"]
        if mean is not None:
            header.append("normalized")
        header.append("partial")
        writer.writerow(header)
        for rep, value, is_partial in zip(
            smoothed.elapsed_ms.tolist(), smoothed.means.tolist(), smoothed.partial.tolist()
        ):
            row = [repr(rep), repr(value)]
            if mean is not None:
                row.append(repr(value / mean))
            row.append(int(is_partial))
            writer.writerow(row)
