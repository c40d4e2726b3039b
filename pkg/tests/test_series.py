import _bootstrap  # noqa: F401
import numpy as np
import pytest
from conftest import SAMPLE_SERIES
from scipy import integrate

from spread_seasonality.book import OrderBook
from spread_seasonality.errors import DegenerateDayError
from spread_seasonality.ingest import parse_event_file
from spread_seasonality.models import MeanMethod, Quote, Scheme, TradingDayBounds
from spread_seasonality.series import (
    SpreadSeries,
    extract_spread_changes,
    mean_spread,
    read_series_csv,
    write_series_csv,
)
from spread_seasonality.smooth import layout_windows, smooth

BOUNDS = TradingDayBounds()
T0 = BOUNDS.t0_ms


def _quotes(pairs, start=T0):
    """Quotes with bid fixed at 1,000,000 and the given spreads, one per ms step."""

    return [Quote(start + i * 10, i, 1_000_000, 1_000_000 + s) for i, s in enumerate(pairs)]


def test_sample_file_series(sample_events_file):
    quotes = list(OrderBook().replay(parse_event_file(sample_events_file)))
    series = extract_spread_changes(quotes, BOUNDS)
    assert series.observations == SAMPLE_SERIES
    assert series.quality.flags == []


def test_only_changes_are_observed():
    pre = [Quote(T0 - 5000, 0, 1_000_000, 1_000_400)]
    series = extract_spread_changes(pre + _quotes([400, 400, 300, 300, 500]), BOUNDS)
    assert series.spreads.tolist() == [300.0, 500.0]
    assert series.times_ms.tolist() == [T0 + 20, T0 + 40]


def test_carry_over_is_not_an_observation():
    pre = [Quote(T0 - 5000, 0, 1_000_000, 1_000_400)]
    with pytest.raises(DegenerateDayError):
        extract_spread_changes(pre + _quotes([400, 400]), BOUNDS)


def test_same_millisecond_changes_collapse_to_last_value():
    quotes = [
        Quote(T0 + 1, 0, 1_000_000, 1_000_200),
        Quote(T0 + 2, 1, 1_000_100, 1_000_200),
        Quote(T0 + 2, 2, 1_000_000, 1_000_200),
        Quote(T0 + 3, 3, 1_000_000, 1_000_300),
    ]
    series = extract_spread_changes(quotes, BOUNDS)
    assert series.observations == [(T0 + 1, 200.0), (T0 + 3, 300.0)]


def test_undefined_and_crossed_spreads_are_counted_not_observed():
    quotes = [
        Quote(T0 + 1, 0, 1_000_000, 1_000_200),
        Quote(T0 + 2, 1, None, 1_000_200),
        Quote(T0 + 3, 2, 1_000_300, 1_000_200),
        Quote(T0 + 4, 3, 1_000_000, 1_000_100),
    ]
    series = extract_spread_changes(quotes, BOUNDS)
    assert series.observations == [(T0 + 1, 200.0), (T0 + 4, 100.0)]
    assert series.quality.undefined_instants == 1
    assert series.quality.nonpositive_instants == 1
    assert series.quality.one_sided_at_open
    assert set(series.quality.flags) == {"one-sided-book", "crossed-book", "one-sided-at-open"}


def test_quotes_after_close_are_ignored():
    quotes = _quotes([200]) + [Quote(BOUNDS.te_ms + 1, 9, 1_000_000, 1_000_900)]
    assert extract_spread_changes(quotes, BOUNDS).spreads.tolist() == [200.0]


def test_mean_spread_hand_integration():
    series = SpreadSeries(0, 400_000, [0, 100_000], [200.0, 400.0])
    assert mean_spread(series, MeanMethod.TIME_WEIGHTED).value == pytest.approx(350.0)
    assert mean_spread(series, MeanMethod.PER_CHANGE).value == pytest.approx(300.0)


def test_mean_spread_of_sample_series(sample_events_file):
    quotes = list(OrderBook().replay(parse_event_file(sample_events_file)))
    series = extract_spread_changes(quotes, BOUNDS)
    assert mean_spread(series, MeanMethod.PER_CHANGE).value == pytest.approx(280.0)
    weighted = 200 * 1500 + 100 * 1000 + 200 * 2000 + 400 * 2000 + 500 * (BOUNDS.te_ms - 34207000)
    expected = weighted / (BOUNDS.te_ms - 34200500)
    assert mean_spread(series).value == pytest.approx(expected)
    assert mean_spread(series).method is MeanMethod.TIME_WEIGHTED


def test_constant_spread_mean_is_that_constant():
    series = SpreadSeries(T0, BOUNDS.te_ms, [T0 + 10], [700.0])
    assert mean_spread(series, MeanMethod.TIME_WEIGHTED).value == 700.0
    assert mean_spread(series, MeanMethod.PER_CHANGE).value == 700.0


def test_empty_series_has_no_mean():
    with pytest.raises(DegenerateDayError):
        mean_spread(SpreadSeries(T0, BOUNDS.te_ms, [], []))


def test_time_weighted_mean_matches_quadrature():
    span = BOUNDS.span_ms
    t_l = 1e-3 * span
    c, alpha = 8.0 * span**0.4, 0.4
    elapsed = np.unique(np.round(np.geomspace(t_l, span - 1, 20_000)).astype(np.int64))
    series = SpreadSeries(T0, BOUNDS.te_ms, T0 + elapsed, c * elapsed.astype(float) ** -alpha)
    integral, _ = integrate.quad(lambda t: c * t**-alpha, float(elapsed[0]), float(span), limit=200)
    expected = integral / (span - elapsed[0])
    assert mean_spread(series).value == pytest.approx(expected, rel=1e-3)


def test_price_rescaling_scales_mean():
    series = SpreadSeries(T0, BOUNDS.te_ms, [T0 + 5, T0 + 900, T0 + 40_000], [300.0, 100.0, 200.0])
    for method in MeanMethod:
        assert mean_spread(series.scaled(4), method).value == 4 * mean_spread(series, method).value


def test_series_csv_round_trip(tmp_path, sample_events_file):
    quotes = list(OrderBook().replay(parse_event_file(sample_events_file)))
    series = extract_spread_changes(quotes, BOUNDS)
    target = tmp_path / "series.csv"
    write_series_csv(series, target)
    assert target.read_text().splitlines()[:2] == ["time_ms,spread_units", "34200500,200"]
    assert read_series_csv(target, BOUNDS).equals(series)


def _random_series(rng):
    n = int(rng.integers(50, 2000))
    elapsed = np.sort(rng.choice(np.arange(1, BOUNDS.span_ms), size=n, replace=False))
    spreads = rng.integers(1, 30, size=n) * 100.0
    return SpreadSeries(T0, BOUNDS.te_ms, T0 + elapsed, spreads)


@pytest.mark.parametrize("instance", range(20))
def test_mean_and_moving_average_under_rescaling_and_shift(instance):
    rng = np.random.default_rng(instance)
    series = _random_series(rng)
    factor = float(rng.uniform(0.01, 100.0))
    delta_ms = int(rng.integers(-3 * 3_600_000, 3 * 3_600_000))
    for method in MeanMethod:
        base = mean_spread(series, method).value
        assert mean_spread(series.scaled(factor), method).value == pytest.approx(factor * base, rel=1e-12)
        assert mean_spread(series.shifted(delta_ms), method).value == pytest.approx(base, rel=1e-12)

    for scheme in Scheme:
        spec = layout_windows(len(series), scheme)
        base = smooth(series, spec)
        scaled = smooth(series.scaled(factor), spec)
        shifted = smooth(series.shifted(delta_ms), spec)
        assert np.allclose(scaled.means, factor * base.means, rtol=1e-12, atol=0.0)
        assert np.array_equal(scaled.elapsed_ms, base.elapsed_ms)
        assert np.allclose(shifted.means, base.means, rtol=1e-12, atol=0.0)
        assert np.array_equal(shifted.elapsed_ms, base.elapsed_ms)
        assert shifted.t0_ms == T0 + delta_ms
