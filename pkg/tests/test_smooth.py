import logging

import _bootstrap  # noqa: F401
import numpy as np
import pytest

from spread_seasonality.errors import DegenerateDayError, InsufficientDataError
from spread_seasonality.models import MeanMethod, Scheme, TradingDayBounds, TRepRule
from spread_seasonality.series import SpreadSeries, mean_spread
from spread_seasonality.smooth import layout_windows, normalize, smooth, write_smoothed_csv

BOUNDS = TradingDayBounds()
T0 = BOUNDS.t0_ms


def _series(values, step_ms=1000, first_ms=1000):
    values = np.asarray(values, dtype=float)
    times = T0 + first_ms + step_ms * np.arange(values.size)
    return SpreadSeries(T0, BOUNDS.te_ms, times, values)


def _alternating(n, low=100.0, high=300.0):
    return _series(np.where(np.arange(n) % 2 == 0, low, high))


def test_doubling_layout_for_1024():
    spec = layout_windows(1024, Scheme.GEOMETRIC_DOUBLING)
    assert spec.bounds == [(1, 64), (65, 128), (129, 256), (257, 512), (513, 1024)]
    assert not any(window.partial for window in spec.windows)


def test_doubling_tags_final_partial_window():
    spec = layout_windows(1000, Scheme.GEOMETRIC_DOUBLING)
    assert spec.bounds[-1] == (513, 1000)
    assert spec.windows[-1].partial
    assert layout_windows(514, Scheme.GEOMETRIC_DOUBLING).bounds[-1] == (513, 514)
    assert layout_windows(513, Scheme.GEOMETRIC_DOUBLING).bounds[-1] == (257, 512)


def test_overlap_layout_starts():
    spec = layout_windows(1000, Scheme.OVERLAP_11)
    assert spec.bounds[:4] == [(1, 64), (65, 128), (70, 141), (77, 155)]


def test_overlap_clamps_end_while_a_quarter_is_covered():
    n = 200
    spec = layout_windows(n, Scheme.OVERLAP_11)
    starts = [start for start, _ in spec.bounds]
    assert starts == sorted(set(starts))
    assert all(end <= n for _, end in spec.bounds)
    clamped = [window for window in spec.windows if window.end == n]
    assert clamped
    assert all(4 * window.size >= n for window in clamped)
    next_start = round(1.1 ** (len(spec.windows) - 1) * 64)
    assert 4 * (n - next_start + 1) < n


def test_schemes_share_first_two_windows():
    for n in (64, 130, 5000):
        doubling = layout_windows(n, Scheme.GEOMETRIC_DOUBLING).bounds[:2]
        overlap = layout_windows(n, Scheme.OVERLAP_11).bounds[:2]
        assert doubling == overlap


def test_too_few_observations():
    with pytest.raises(InsufficientDataError):
        layout_windows(63, Scheme.GEOMETRIC_DOUBLING)


def test_constant_window_mean_and_geometric_rep():
    series = _series([500.0] * 64)
    smoothed = smooth(series, layout_windows(64, Scheme.GEOMETRIC_DOUBLING))
    assert smoothed.means.tolist() == [500.0]
    assert smoothed.elapsed_ms[0] == pytest.approx(np.sqrt(1000 * 64000))


def test_last_observation_rep_rule():
    series = _alternating(128)
    smoothed = smooth(series, layout_windows(128, Scheme.GEOMETRIC_DOUBLING), TRepRule.LAST)
    assert smoothed.elapsed_ms.tolist() == [64000.0, 128000.0]


def test_time_weighted_windows():
    values = [100.0, 300.0] * 32
    times = T0 + np.concatenate([[1000 * i, 1000 * i + 100] for i in range(32)])
    series = SpreadSeries(T0, BOUNDS.te_ms, times, values)
    spec = layout_windows(64, Scheme.GEOMETRIC_DOUBLING)
    per_change = smooth(series, spec, weighting=MeanMethod.PER_CHANGE)
    assert per_change.means[0] == pytest.approx(200.0)
    # The last 300 runs to the close; every other 300 lasts 100 ms of each second.
    tail = BOUNDS.te_ms - int(times[-1])
    expected = (31 * (100 * 100 + 300 * 900) + 100 * 100 + 300 * tail) / (31 * 1000 + 100 + tail)
    weighted = smooth(series, spec, weighting=MeanMethod.TIME_WEIGHTED)
    assert weighted.means[0] == pytest.approx(expected)


def test_window_without_positive_spreads_is_skipped():
    values = np.concatenate([np.full(64, 200.0), np.zeros(64)])
    series = _series(values)
    smoothed = smooth(series, layout_windows(128, Scheme.GEOMETRIC_DOUBLING))
    assert len(smoothed) == 1


def test_skipped_window_warning_names_the_stock_day(caplog):
    values = np.concatenate([np.full(64, 200.0), np.zeros(64)])
    with caplog.at_level(logging.WARNING, logger="spread_seasonality.smooth"):
        smooth(_series(values), layout_windows(128, Scheme.GEOMETRIC_DOUBLING), label="ABC 2016-03-01")
    assert "ABC 2016-03-01: skipping geometric-doubling window [65, 128]" in caplog.text


def test_window_means_follow_power_law():
    span = BOUNDS.span_ms
    c, alpha = 8.0 * span**0.4, 0.4
    elapsed = np.arange(1, 20_001) * (span // 20_001)
    series = SpreadSeries(T0, BOUNDS.te_ms, T0 + elapsed, c * elapsed.astype(float) ** -alpha)
    smoothed = smooth(series, layout_windows(len(series), Scheme.GEOMETRIC_DOUBLING)).complete()
    inner = slice(1, None)
    predicted = c * smoothed.elapsed_ms[inner] ** -alpha
    assert np.allclose(smoothed.means[inner], predicted, rtol=0.05)


def test_normalized_constant_series_is_one():
    series = _series([400.0] * 200)
    smoothed = smooth(series, layout_windows(200, Scheme.OVERLAP_11))
    normalized = normalize(smoothed, mean_spread(series))
    assert np.all(normalized.means == 1.0)
    assert normalized.normalized
    with pytest.raises(ValueError):
        normalize(normalized, 1.0)
    with pytest.raises(DegenerateDayError):
        normalize(smoothed, 0.0)


def test_price_rescaling_and_time_shift():
    rng = np.random.default_rng(3)
    values = 100.0 * rng.integers(1, 9, 500)
    series = SpreadSeries(T0, BOUNDS.te_ms, T0 + 1 + np.cumsum(rng.integers(1, 5000, 500)), values)
    spec = layout_windows(500, Scheme.GEOMETRIC_DOUBLING)
    for weighting in MeanMethod:
        base = smooth(series, spec, weighting=weighting)
        scaled = smooth(series.scaled(8), spec, weighting=weighting)
        assert np.array_equal(scaled.means, 8 * base.means)
        assert np.array_equal(
            normalize(scaled, mean_spread(series.scaled(8), weighting)).means,
            normalize(base, mean_spread(series, weighting)).means,
        )
        shifted = smooth(series.shifted(-3_600_000), spec, weighting=weighting)
        assert np.array_equal(shifted.elapsed_ms, base.elapsed_ms)
        assert np.array_equal(shifted.means, base.means)


def test_smoothed_csv(tmp_path):
    series = _series([400.0] * 128)
    smoothed = smooth(series, layout_windows(128, Scheme.GEOMETRIC_DOUBLING))
    target = tmp_path / "smoothed.csv"
    write_smoothed_csv(smoothed, target, mean=400.0)
    lines = target.read_text().splitlines()
    assert lines[0] == "elapsed_ms,mean_units,normalized,partial"
    assert lines[1].endswith(",400.0,1.0,0")
