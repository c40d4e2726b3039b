"""Synthetic spread series and order-flow streams with known ground truth.

The spread series is drawn first: event times from a rate model, values
from a scenario curve with multiplicative log-normal noise, rounded to whole
ticks. Where rounding repeats the previous level, a one-tick excursion and
an early return are emitted instead, so consecutive observations always
differ. The event stream is then built to reproduce that series exactly when
replayed through :class:`~spread_seasonality.book.OrderBook`.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import asdict, dataclass, field, replace
from enum import Enum
from pathlib import Path
from typing import List, Optional, Tuple

import numpy as np

from .errors import ScenarioError
from .models import (
    DEFAULT_TICK_SIZE,
    MS_PER_MINUTE,
    Direction,
    EventKind,
    MarketEvent,
    TickLabel,
    TradingDayBounds,
)
from .series import SpreadSeries

LOGGER = logging.getLogger(__name__)

PRE_MARKET_LEAD_MS = MS_PER_MINUTE
HIDDEN_EXECUTION_PROBABILITY = 0.1
MAX_BEHIND_TICKS = 3
# Hidden executions never reference a visible order.
HIDDEN_ORDER_ID = 0


# ----------------------------------------------------------------------
# idealized power law
# ----------------------------------------------------------------------
@dataclass(frozen=True)
class IdealizedSpreadModel:
    """``s(t) = c * t**-alpha`` for elapsed times ``t_l <= t <= t_e``."""

    prefactor: float
    alpha: float
    t_l: float
    t_e: float

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ScenarioError(f"alpha must lie in (0, 1), got {self.alpha}")
        if not 0 < self.t_l < self.t_e:
            raise ScenarioError(f"need 0 < t_l < t_e, got t_l={self.t_l}, t_e={self.t_e}")
        if self.prefactor <= 0:
            raise ScenarioError(f"prefactor must be positive, got {self.prefactor}")


@dataclass(frozen=True)
class IdealMean:
    exact: float
    approximation: float

    @property
    def relative_error(self) -> float:
        return abs(self.approximation - self.exact) / self.exact


def ideal_spread(model: IdealizedSpreadModel, t_elapsed: float | np.ndarray) -> float | np.ndarray:
    values = np.asarray(t_elapsed, dtype=np.float64)
    if np.any(values < model.t_l) or np.any(values > model.t_e):
        raise ScenarioError(f"elapsed time outside [{model.t_l}, {model.t_e}]")
    result = model.prefactor * values ** (-model.alpha)
    return float(result) if result.ndim == 0 else result


def ideal_mean(model: IdealizedSpreadModel) -> IdealMean:
    """Exact time average over ``[t_l, t_e]`` and the ``s(t_e) / (1 - alpha)`` shortcut."""

    c, a = model.prefactor, model.alpha
    exact = c / (1 - a) * (model.t_e ** (1 - a) - model.t_l ** (1 - a)) / (model.t_e - model.t_l)
    approximation = c * model.t_e ** (-a) / (1 - a)
    return IdealMean(exact, approximation)


def equivalent_prefactor(c1: float, alpha: float, k: float) -> float:
    """Prefactor after stretching the reference time by ``k``; the curve is unchanged."""

    if k <= 0:
        raise ScenarioError(f"k must be positive, got {k}")
    return c1 * k ** (-alpha)


# ----------------------------------------------------------------------
# scenarios
# ----------------------------------------------------------------------
class ScenarioKind(str, Enum):
    POWER_LAW_DECAY = "power-law-decay"
    SATURATING_LARGE_TICK = "saturating-large-tick"
    PLANTED_OPENING = "planted-opening"
    CONSTANT_SPREAD = "constant-spread"
    DEGENERATE_START = "degenerate-start"


class RateModel(str, Enum):
    POISSON = "poisson"
    BURSTY = "bursty"


@dataclass(frozen=True)
class SyntheticScenario:
    """Parameters of one synthetic stock-day.

    Spread levels are in ticks. ``terminal_ticks`` is the power-law value at
    the close; ``opening_ticks`` is the saturating curve's value at the open;
    ``level_ticks`` is the flat level of the constant and planted-opening
    curves (the latter triples it for ``opening_minutes``).
    """

    kind: ScenarioKind = ScenarioKind.POWER_LAW_DECAY
    n_changes: int = 50_000
    seed: int = 0
    noise: float = 0.05
    rate_model: RateModel = RateModel.POISSON
    burst_minutes: float = 30.0
    burst_factor: float = 3.0
    alpha: float = 0.4
    terminal_ticks: float = 8.0
    level_ticks: float = 5.0
    opening_ticks: float = 6.0
    saturation_minutes: float = 2.0
    opening_minutes: float = 30.0
    in_spread_fraction: float = 0.3
    fillers_per_change: float = 1.0
    flicker_fraction: float = 0.01
    tick_size: int = DEFAULT_TICK_SIZE
    bounds: TradingDayBounds = field(default_factory=TradingDayBounds)
    base_price: int = 1_000_000

    def validate(self) -> None:
        kind = ScenarioKind(self.kind)
        RateModel(self.rate_model)
        span = self.bounds.span_ms
        if self.n_changes < 0:
            raise ScenarioError("n_changes must not be negative")
        if span - 2 * self.n_changes - 2 < 0:
            raise ScenarioError(f"{self.n_changes} changes do not fit into a {span} ms day")
        if self.bounds.t0_ms < PRE_MARKET_LEAD_MS:
            raise ScenarioError("market open too early to seed a pre-market book")
        if self.noise < 0:
            raise ScenarioError("noise must not be negative")
        if kind is ScenarioKind.POWER_LAW_DECAY and not 0 < self.alpha < 1:
            raise ScenarioError(f"alpha must lie in (0, 1), got {self.alpha}")
        for name in ("terminal_ticks", "level_ticks", "opening_ticks"):
            if getattr(self, name) < 1:
                raise ScenarioError(f"{name} must be at least one tick")
        if self.saturation_minutes <= 0 or self.opening_minutes <= 0:
            raise ScenarioError("time constants must be positive")
        if self.opening_minutes * MS_PER_MINUTE >= span:
            raise ScenarioError("planted opening must end before the close")
        if not 0 < self.in_spread_fraction < 1:
            raise ScenarioError("in_spread_fraction must lie in (0, 1)")
        if self.fillers_per_change < 0:
            raise ScenarioError("fillers_per_change must not be negative")
        if not 0 < self.flicker_fraction < 1:
            raise ScenarioError("flicker_fraction must lie in (0, 1)")
        if self.burst_factor < 1 or not 0 <= self.burst_minutes * MS_PER_MINUTE < span:
            raise ScenarioError("bursty rate needs burst_factor >= 1 and a burst inside the day")
        if self.tick_size <= 0 or self.base_price <= self.tick_size:
            raise ScenarioError("tick size and base price must be positive, price above one tick")


@dataclass(frozen=True)
class GroundTruth:
    kind: ScenarioKind
    seed: int
    n_changes: int
    n_observations: int
    alpha: Optional[float]
    opening_ms: Optional[float]
    tick_label: TickLabel
    in_spread_fraction: float
    n_submissions: int = 0
    n_in_spread: int = 0

    @property
    def realized_in_spread_fraction(self) -> Optional[float]:
        return self.n_in_spread / self.n_submissions if self.n_submissions else None


def _power_law_model(scenario: SyntheticScenario) -> IdealizedSpreadModel:
    span = float(scenario.bounds.span_ms)
    return IdealizedSpreadModel(scenario.terminal_ticks * span**scenario.alpha, scenario.alpha, 1e-3 * span, span)


def _curve(scenario: SyntheticScenario, elapsed: np.ndarray) -> np.ndarray:
    """Noise-free spread in ticks at elapsed times (ms)."""

    kind = ScenarioKind(scenario.kind)
    if kind is ScenarioKind.POWER_LAW_DECAY:
        model = _power_law_model(scenario)
        return ideal_spread(model, np.clip(elapsed, model.t_l, model.t_e))  # type: ignore[return-value]
    if kind is ScenarioKind.SATURATING_LARGE_TICK:
        tau = scenario.saturation_minutes * MS_PER_MINUTE
        return 1.0 + (scenario.opening_ticks - 1.0) * np.exp(-elapsed / tau)
    if kind is ScenarioKind.PLANTED_OPENING:
        cut = scenario.opening_minutes * MS_PER_MINUTE
        return np.where(elapsed <= cut, 3.0 * scenario.level_ticks, scenario.level_ticks)
    if kind is ScenarioKind.CONSTANT_SPREAD:
        return np.full(elapsed.shape, float(scenario.level_ticks))
    return np.ones(elapsed.shape)


def _planted_truth(scenario: SyntheticScenario) -> Tuple[Optional[float], Optional[float], TickLabel]:
    """Planted exponent, opening duration and tick class."""

    kind = ScenarioKind(scenario.kind)
    span = scenario.bounds.span_ms
    if kind is ScenarioKind.POWER_LAW_DECAY:
        model = _power_law_model(scenario)
        threshold = 1.5 * ideal_mean(model).exact
        return scenario.alpha, (model.prefactor / threshold) ** (1 / model.alpha), TickLabel.SMALL
    if kind is ScenarioKind.SATURATING_LARGE_TICK:
        tau = scenario.saturation_minutes * MS_PER_MINUTE
        excess = scenario.opening_ticks - 1.0
        mean = 1.0 + excess * tau / span * (1 - math.exp(-span / tau))
        margin = 1.5 * mean - 1.0
        opening = tau * math.log(excess / margin) if 0 < margin < excess else 0.0
        return None, opening, TickLabel.LARGE
    if kind is ScenarioKind.PLANTED_OPENING:
        return None, scenario.opening_minutes * MS_PER_MINUTE, TickLabel.SMALL
    if kind is ScenarioKind.CONSTANT_SPREAD:
        return None, 0.0, TickLabel.SMALL
    return None, None, TickLabel.LARGE


def _draw_times(scenario: SyntheticScenario, rng: np.random.Generator) -> np.ndarray:
    """Strictly increasing ms stamps at least 2 ms apart, inside (t0, te - 3]."""

    n = scenario.n_changes
    bounds = scenario.bounds
    span = float(bounds.span_ms)
    arrivals = np.cumsum(rng.exponential(1.0, n + 1))
    operational = arrivals[:n] / arrivals[n]
    if RateModel(scenario.rate_model) is RateModel.BURSTY:
        burst = scenario.burst_minutes * MS_PER_MINUTE
        factor = scenario.burst_factor
        total = factor * burst + (span - burst)
        target = operational * total
        real = np.where(target < factor * burst, target / factor, burst + (target - factor * burst))
    else:
        real = operational * span
    budget = span - 2 * n - 2
    offsets = np.floor(real * (budget / span)).astype(np.int64)
    return bounds.t0_ms + 1 + offsets + 2 * np.arange(n, dtype=np.int64)


def _round_ticks(raw: np.ndarray) -> np.ndarray:
    return np.maximum(1, np.floor(raw + 0.5)).astype(np.int64)


def _draw_series(scenario: SyntheticScenario) -> Tuple[SpreadSeries, int]:
    """Return the series plus the carry-over spread (units) in force at the open."""

    scenario.validate()
    rng = np.random.default_rng(scenario.seed)
    bounds = scenario.bounds
    n = scenario.n_changes
    times = _draw_times(scenario, rng)
    noise = np.exp(scenario.noise * rng.standard_normal(n + 1))

    carry_raw = float(_curve(scenario, np.zeros(1))[0]) * noise[0]
    carry = int(_round_ticks(np.array([carry_raw]))[0])
    if n == 0:
        empty = np.empty(0, dtype=np.int64)
        return SpreadSeries(bounds.t0_ms, bounds.te_ms, empty, empty), carry * scenario.tick_size
    raw = _curve(scenario, (times - bounds.t0_ms).astype(np.float64)) * noise[1:]
    levels = _round_ticks(raw)

    previous = np.concatenate(([carry], levels[:-1]))
    flicker = levels == previous
    up = (raw > levels) | (levels == 1)
    first = np.where(flicker, levels + np.where(up, 1, -1), levels)
    gaps = np.append(np.diff(times), bounds.te_ms - times[-1])
    dwell = np.clip(np.floor(scenario.flicker_fraction * gaps), 1, gaps - 1).astype(np.int64)

    size = n + int(flicker.sum())
    positions = np.arange(n) + np.concatenate(([0], np.cumsum(flicker)[:-1])).astype(np.int64)
    obs_times = np.empty(size, dtype=np.int64)
    obs_ticks = np.empty(size, dtype=np.int64)
    obs_times[positions] = times
    obs_ticks[positions] = first
    returns = positions[flicker] + 1
    obs_times[returns] = times[flicker] + dwell[flicker]
    obs_ticks[returns] = levels[flicker]

    spreads = (obs_ticks * scenario.tick_size).astype(np.float64)
    return SpreadSeries(bounds.t0_ms, bounds.te_ms, obs_times, spreads), carry * scenario.tick_size


def generate_spread_series(scenario: SyntheticScenario) -> Tuple[SpreadSeries, GroundTruth]:
    """Draw the spread-change series of ``scenario`` with its planted truth."""

    series, _ = _draw_series(scenario)
    alpha, opening, label = _planted_truth(scenario)
    truth = GroundTruth(
        kind=ScenarioKind(scenario.kind),
        seed=scenario.seed,
        n_changes=scenario.n_changes,
        n_observations=len(series),
        alpha=alpha,
        opening_ms=opening,
        tick_label=label,
        in_spread_fraction=scenario.in_spread_fraction,
    )
    return series, truth


# ----------------------------------------------------------------------
# event streams
# ----------------------------------------------------------------------
class _StreamWriter:
    """Keeps one resting order per side at the quote and emits events."""

    def __init__(self, scenario: SyntheticScenario, rng: np.random.Generator):
        self.scenario = scenario
        self.tick = scenario.tick_size
        self.rng = rng
        self.events: List[MarketEvent] = []
        self.next_id = 1
        self.best: dict = {}
        self.submissions = 0

    def _emit(self, time_ms: int, kind: EventKind, order_id: int, size: int, price: int, direction: Direction) -> None:
        self.events.append(MarketEvent(time_ms, len(self.events), kind, order_id, size, price, direction))

    def _size(self) -> int:
        return 100 * int(self.rng.integers(1, 11))

    def submit(self, time_ms: int, price: int, direction: Direction) -> Tuple[int, int]:
        order_id, size = self.next_id, self._size()
        self.next_id += 1
        self.submissions += 1
        self._emit(time_ms, EventKind.SUBMIT, order_id, size, price, direction)
        return order_id, size

    def seed_book(self, time_ms: int, bid: int, ask: int) -> None:
        self.best[Direction.BUY] = (*self.submit(time_ms, bid, Direction.BUY), bid)
        self.best[Direction.SELL] = (*self.submit(time_ms, ask, Direction.SELL), ask)

    @property
    def bid(self) -> int:
        return self.best[Direction.BUY][2]

    @property
    def ask(self) -> int:
        return self.best[Direction.SELL][2]

    def in_spread_filler(self, time_ms: int) -> None:
        inside = (self.ask - self.bid) // self.tick - 1
        price = self.bid + self.tick * int(self.rng.integers(1, inside + 1))
        direction = Direction.BUY if self.rng.random() < 0.5 else Direction.SELL
        order_id, size = self.submit(time_ms, price, direction)
        self._emit(time_ms, EventKind.DELETE, order_id, size, price, direction)

    def out_of_spread_filler(self, time_ms: int) -> None:
        direction = Direction.BUY if self.rng.random() < 0.5 else Direction.SELL
        behind = int(self.rng.integers(0, MAX_BEHIND_TICKS + 1))
        if direction is Direction.BUY:
            price = max(self.tick, self.bid - behind * self.tick)
        else:
            price = self.ask + behind * self.tick
        order_id, size = self.submit(time_ms, price, direction)
        removal = int(self.rng.integers(0, 3))
        if removal == 0:
            self._emit(time_ms, EventKind.DELETE, order_id, size, price, direction)
        elif removal == 1:
            part = 100 * int(self.rng.integers(1, size // 100)) if size > 100 else 1
            self._emit(time_ms, EventKind.PARTIAL_CANCEL, order_id, part, price, direction)
            self._emit(time_ms, EventKind.DELETE, order_id, size - part, price, direction)
        else:
            self._emit(time_ms, EventKind.EXECUTE_VISIBLE, order_id, size, price, direction)
        if self.rng.random() < HIDDEN_EXECUTION_PROBABILITY:
            self._emit(time_ms, EventKind.EXECUTE_HIDDEN, HIDDEN_ORDER_ID, self._size(), price, direction)

    def change_spread(self, time_ms: int, new_spread: int) -> bool:
        """Move one side so the spread becomes ``new_spread``; True if it narrowed."""

        delta = new_spread - (self.ask - self.bid)
        direction = Direction.BUY if self.rng.random() < 0.5 else Direction.SELL
        if direction is Direction.BUY and self.bid - delta <= self.tick:
            direction = Direction.SELL
        old_id, old_size, old_price = self.best[direction]
        price = old_price - delta if direction is Direction.BUY else old_price + delta
        order_id, size = self.submit(time_ms, price, direction)
        kind = EventKind.DELETE if self.rng.random() < 0.5 else EventKind.EXECUTE_VISIBLE
        self._emit(time_ms, kind, old_id, old_size, old_price, direction)
        self.best[direction] = (order_id, size, price)
        return delta < 0


def generate_event_stream(scenario: SyntheticScenario) -> Tuple[List[MarketEvent], GroundTruth]:
    """Order flow whose replay reproduces :func:`generate_spread_series` exactly.

    Besides the submissions that move the quote, transient filler orders are
    added and removed within the same millisecond so the planted share of
    submissions priced strictly inside the spread is met.
    """

    series, carry = _draw_series(scenario)
    alpha, opening, label = _planted_truth(scenario)
    truth = GroundTruth(
        kind=ScenarioKind(scenario.kind),
        seed=scenario.seed,
        n_changes=scenario.n_changes,
        n_observations=len(series),
        alpha=alpha,
        opening_ms=opening,
        tick_label=label,
        in_spread_fraction=scenario.in_spread_fraction,
    )
    n_obs = len(series)
    if n_obs == 0:
        return [], truth

    rng = np.random.default_rng([scenario.seed, 1])
    spreads = series.spreads.astype(np.int64)
    prior = np.concatenate(([carry], spreads[:-1]))
    natural = int((spreads < prior).sum())

    fraction = scenario.in_spread_fraction
    desired = n_obs + int(round(scenario.fillers_per_change * n_obs))
    total = max(desired, math.ceil(natural / fraction), math.ceil((n_obs - natural) / (1 - fraction)))
    n_in = int(round(fraction * total)) - natural
    eligible = np.flatnonzero(prior >= 2 * scenario.tick_size)
    if n_in > 0 and eligible.size == 0:
        LOGGER.warning("No spread wide enough for in-spread fillers; planting none")
        n_in = 0
    n_out = max(0, total - n_obs - n_in)
    in_counts = np.bincount(rng.choice(eligible, n_in), minlength=n_obs) if n_in else np.zeros(n_obs, np.int64)
    out_counts = np.bincount(rng.integers(0, n_obs, n_out), minlength=n_obs)

    writer = _StreamWriter(scenario, rng)
    writer.seed_book(scenario.bounds.t0_ms - PRE_MARKET_LEAD_MS, scenario.base_price, scenario.base_price + carry)
    narrowed = 0
    for index, (time_ms, value) in enumerate(zip(series.times_ms.tolist(), spreads.tolist())):
        for _ in range(int(in_counts[index])):
            writer.in_spread_filler(time_ms)
        for _ in range(int(out_counts[index])):
            writer.out_of_spread_filler(time_ms)
        narrowed += writer.change_spread(time_ms, value)

    LOGGER.debug("Generated %s events for %s observations", len(writer.events), n_obs)
    truth = replace(truth, n_submissions=writer.submissions - 2, n_in_spread=narrowed + n_in)
    return writer.events, truth


def write_truth(truth: GroundTruth, path: str | Path) -> None:
    """Ground-truth sidecar as JSON."""

    payload = asdict(truth)
    payload["kind"] = truth.kind.value
    payload["tick_label"] = truth.tick_label.value
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def read_truth(path: str | Path) -> GroundTruth:
    payload = json.loads(Path(path).read_text(encoding="utf-8"))
    payload["kind"] = ScenarioKind(payload["kind"])
    payload["tick_label"] = TickLabel(payload["tick_label"])
    return GroundTruth(**payload)
