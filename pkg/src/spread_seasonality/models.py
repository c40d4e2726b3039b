"""Dataclasses and enums shared across the pipeline."""
from __future__ import annotations

from collections.abc import Sequence
from dataclasses import dataclass, field
from enum import Enum, IntEnum
from typing import ClassVar, Dict, Iterable, Iterator, List, NamedTuple, Optional, Tuple, Union

import numpy as np

MS_PER_SECOND = 1_000
MS_PER_MINUTE = 60 * MS_PER_SECOND
MS_PER_HOUR = 60 * MS_PER_MINUTE

# One cent in price units of 1e-4 dollars.
DEFAULT_TICK_SIZE = 100
PRICE_UNITS_PER_DOLLAR = 10_000


class EventKind(IntEnum):
    SUBMIT = 1
    PARTIAL_CANCEL = 2
    DELETE = 3
    EXECUTE_VISIBLE = 4
    EXECUTE_HIDDEN = 5


class Direction(IntEnum):
    BUY = 1
    SELL = -1


@dataclass(frozen=True, slots=True)
class MarketEvent:
    """One normalized order-flow message."""

    time_ms: int
    seq: int
    kind: EventKind
    order_id: int
    size: int
    price: int
    direction: Direction


KINDS_BY_CODE = {kind.value: kind for kind in EventKind}
DIRECTIONS_BY_CODE = {direction.value: direction for direction in Direction}


@dataclass(frozen=True, eq=False)
class EventColumns(Sequence):
    """Events as parallel int64 arrays in file order.

    Indexing with an integer gives a :class:`MarketEvent`; slicing or a
    boolean mask gives another :class:`EventColumns` sharing ``seq`` values
    with the original.
    """

    FIELDS: ClassVar[Tuple[str, ...]] = ("time_ms", "seq", "kind", "order_id", "size", "price", "direction")

    time_ms: np.ndarray
    seq: np.ndarray
    kind: np.ndarray
    order_id: np.ndarray
    size: np.ndarray
    price: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        for name in self.FIELDS:
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64).reshape(-1))
        if len({getattr(self, name).size for name in self.FIELDS}) != 1:
            raise ValueError("event columns must have the same length")

    @classmethod
    def empty(cls) -> "EventColumns":
        return cls(*(np.empty(0, dtype=np.int64) for _ in cls.FIELDS))

    @classmethod
    def from_table(cls, table: np.ndarray) -> "EventColumns":
        """Columns from an ``(n, 6)`` table in file column order; ``seq`` is the row index."""

        time_ms, kind, order_id, size, price, direction = np.asarray(table, dtype=np.int64).T
        return cls(time_ms, np.arange(time_ms.size, dtype=np.int64), kind, order_id, size, price, direction)

    @classmethod
    def from_events(cls, events: Iterable[MarketEvent]) -> "EventColumns":
        rows = [
            (event.time_ms, event.seq, int(event.kind), event.order_id, event.size, event.price, int(event.direction))
            for event in events
        ]
        if not rows:
            return cls.empty()
        return cls(*np.array(rows, dtype=np.int64).T)

    def __len__(self) -> int:
        return int(self.time_ms.size)

    def __getitem__(self, index):  # type: ignore[override]
        if isinstance(index, (int, np.integer)):
            time_ms, seq, kind, order_id, size, price, direction = (
                int(getattr(self, name)[index]) for name in self.FIELDS
            )
            return MarketEvent(
                time_ms, seq, KINDS_BY_CODE[kind], order_id, size, price, DIRECTIONS_BY_CODE[direction]
            )
        return self.select(index)

    def __iter__(self) -> Iterator[MarketEvent]:
        for time_ms, seq, kind, order_id, size, price, direction in self.rows():
            yield MarketEvent(time_ms, seq, KINDS_BY_CODE[kind], order_id, size, price, DIRECTIONS_BY_CODE[direction])

    def select(self, index: Union[slice, np.ndarray]) -> "EventColumns":
        return EventColumns(*(getattr(self, name)[index] for name in self.FIELDS))

    def rows(self) -> Iterator[Tuple[int, int, int, int, int, int, int]]:
        """Plain-int tuples ``(time_ms, seq, kind, order_id, size, price, direction)``."""

        return zip(*(getattr(self, name).tolist() for name in self.FIELDS))

    def split_at(self, *times_ms: int) -> List["EventColumns"]:
        """Cut at the first event at or after each time; ``time_ms`` must be sorted."""

        cuts = np.searchsorted(self.time_ms, np.asarray(times_ms, dtype=np.int64), side="left").tolist()
        bounds = [0, *cuts, len(self)]
        return [self.select(slice(lo, hi)) for lo, hi in zip(bounds[:-1], bounds[1:])]

    def kind_counts(self) -> Dict[EventKind, int]:
        counts = np.bincount(self.kind, minlength=len(EventKind) + 1)
        return {kind: int(counts[kind.value]) for kind in EventKind}


@dataclass(frozen=True)
class TradingDayBounds:
    """Market open ``t0_ms`` and close ``te_ms`` in ms since midnight."""

    t0_ms: int = 9 * MS_PER_HOUR + 30 * MS_PER_MINUTE
    te_ms: int = 16 * MS_PER_HOUR

    def __post_init__(self) -> None:
        if self.t0_ms >= self.te_ms:
            raise ValueError(f"market open {self.t0_ms} must precede close {self.te_ms}")

    @property
    def span_ms(self) -> int:
        return self.te_ms - self.t0_ms

    def contains(self, time_ms: int) -> bool:
        return self.t0_ms <= time_ms <= self.te_ms


class Quote(NamedTuple):
    """Best bid and ask after the event with sequence number ``seq``."""

    time_ms: int
    seq: int
    best_bid: Optional[int]
    best_ask: Optional[int]

    @property
    def is_two_sided(self) -> bool:
        return self.best_bid is not None and self.best_ask is not None

    @property
    def is_crossed(self) -> bool:
        """True for locked or crossed books (ask at or below bid)."""

        return self.is_two_sided and self.best_ask <= self.best_bid  # type: ignore[operator]


class MeanMethod(str, Enum):
    TIME_WEIGHTED = "time-weighted"
    PER_CHANGE = "per-change"


class TRepRule(str, Enum):
    GEOMETRIC = "geometric"
    LAST = "last"


class Scheme(str, Enum):
    GEOMETRIC_DOUBLING = "geometric-doubling"
    OVERLAP_11 = "overlap-1.1"


class OpeningStatus(str, Enum):
    OK = "ok"
    NEVER_ABOVE = "never-above"
    ALWAYS_ABOVE = "always-above"


class TickLabel(str, Enum):
    LARGE = "large-tick"
    SMALL = "small-tick"


class TickCriterion(str, Enum):
    TERMINAL_SATURATION = "terminal-saturation"
    MEAN_SPREAD_THRESHOLD = "mean-spread-threshold"


class IntervalTag(str, Enum):
    OPENING = "opening"
    NOON = "noon"
    TWO_PM = "two-pm"


@dataclass(frozen=True)
class OpeningResult:
    t1_ms: float
    duration_ms: float
    status: OpeningStatus
    threshold: float

    @property
    def duration_minutes(self) -> float:
        return self.duration_ms / MS_PER_MINUTE


@dataclass(frozen=True)
class TickClass:
    label: TickLabel
    criterion: TickCriterion
    tolerance_ticks: float


@dataclass(frozen=True)
class PowerLawFit:
    alpha: float
    prefactor: float
    fit_range_ms: Tuple[float, float]
    residual: float
    n_windows: int


@dataclass(frozen=True)
class ComparisonInterval:
    tag: IntervalTag
    start_ms: int
    end_ms: int
    clamped: bool = False


@dataclass(frozen=True)
class VolatilityReport:
    tag: IntervalTag
    sigma: float
    n_returns: int
    n_skipped: int = 0


@dataclass
class StockDayReport:
    """Everything computed for one (ticker, day)."""

    ticker: str
    day: str
    mean_spread: Optional[float]
    mean_method: MeanMethod
    tick_size: int
    n_events: int = 0
    n_observations: int = 0
    opening: Optional[OpeningResult] = None
    tick_class: Optional[TickClass] = None
    degenerate_start: bool = False
    power_law: Optional[PowerLawFit] = None
    terminal_ratio: Optional[float] = None
    t_rep_rule: TRepRule = TRepRule.GEOMETRIC
    window_weighting: MeanMethod = MeanMethod.TIME_WEIGHTED
    volatility: Dict[str, Optional[VolatilityReport]] = field(default_factory=dict)
    in_spread_share: Dict[str, Optional[float]] = field(default_factory=dict)
    flags: List[str] = field(default_factory=list)

    @property
    def key(self) -> Tuple[str, str]:
        return (self.ticker, self.day)


@dataclass(frozen=True)
class StockSummary:
    ticker: str
    n_days: int
    mean_duration_ms: Optional[float]
    quotient: Optional[float]
    tick_label: Optional[TickLabel]
    mean_spread: Optional[float]
    small_spread: bool = False
    flags: Tuple[str, ...] = ()
