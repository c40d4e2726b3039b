"""Visible limit order book reconstructed from replayed events."""
from __future__ import annotations

import json
import logging
from bisect import bisect_left, insort
from dataclasses import dataclass
from pathlib import Path
from typing import Dict, Iterable, Iterator, List, Optional, Tuple, Union

from .errors import BookIntegrityError, UndefinedQuoteError
from .models import DIRECTIONS_BY_CODE, Direction, EventColumns, EventKind, MarketEvent, Quote

LOGGER = logging.getLogger(__name__)

MAX_RECORDED_ERRORS = 20

_SUBMIT = EventKind.SUBMIT.value
_DELETE = EventKind.DELETE.value
_EXECUTE_HIDDEN = EventKind.EXECUTE_HIDDEN.value
_BUY = Direction.BUY.value


@dataclass(slots=True)
class OrderRecord:
    order_id: int
    direction: Direction
    price: int
    remaining_size: int


class OrderBook:
    """Two price ladders plus an order-id index.

    Each ladder keeps ``price -> aggregate size`` in a dict and the occupied
    prices in an ascending list, so the best bid is the last bid price and
    the best ask the first ask price.
    """

    def __init__(self, strict: bool = False):
        self.strict = strict
        self._orders: Dict[int, OrderRecord] = {}
        self._bids: Dict[int, int] = {}
        self._asks: Dict[int, int] = {}
        self._bid_prices: List[int] = []
        self._ask_prices: List[int] = []
        self.integrity_error_count = 0
        self.integrity_errors: List[str] = []
        self.crossed = False
        self.events_applied = 0

    # ------------------------------------------------------------------
    # quotes
    # ------------------------------------------------------------------
    @property
    def best_bid(self) -> Optional[int]:
        return self._bid_prices[-1] if self._bid_prices else None

    @property
    def best_ask(self) -> Optional[int]:
        return self._ask_prices[0] if self._ask_prices else None

    def quote(self, time_ms: int = 0, seq: int = -1) -> Quote:
        return Quote(time_ms, seq, self.best_bid, self.best_ask)

    # ------------------------------------------------------------------
    # event application
    # ------------------------------------------------------------------
    def apply_event(self, event: MarketEvent) -> Optional[Quote]:
        """Apply ``event`` and return the new quote if best bid or ask moved."""

        return self._apply(
            event.time_ms, event.seq, event.kind, event.order_id, event.size, event.price, event.direction
        )

    def replay(self, events: Union[EventColumns, Iterable[MarketEvent]]) -> Iterator[Quote]:
        """Apply events in order, yielding every quote change.

        :class:`EventColumns` are replayed row by row from their arrays
        without building a :class:`MarketEvent` per row.
        """

        if isinstance(events, EventColumns):
            rows: Iterable[tuple] = events.rows()
        else:
            rows = (
                (event.time_ms, event.seq, event.kind, event.order_id, event.size, event.price, event.direction)
                for event in events
            )
        apply = self._apply
        for row in rows:
            change = apply(*row)
            if change is not None:
                yield change

    def apply_all(self, events: Union[EventColumns, Iterable[MarketEvent]]) -> int:
        """Replay ``events`` and return the number of quote changes."""

        return sum(1 for _ in self.replay(events))

    def _apply(
        self, time_ms: int, seq: int, kind: int, order_id: int, size: int, price: int, direction: int
    ) -> Optional[Quote]:
        self.events_applied += 1
        if kind == _EXECUTE_HIDDEN:
            return None

        bid_prices = self._bid_prices
        ask_prices = self._ask_prices
        bid_before = bid_prices[-1] if bid_prices else None
        ask_before = ask_prices[0] if ask_prices else None

        if kind == _SUBMIT:
            orders = self._orders
            if order_id in orders:
                self._integrity_error(time_ms, seq, f"duplicate submit of live order {order_id}")
                return None
            orders[order_id] = OrderRecord(order_id, DIRECTIONS_BY_CODE[direction], price, size)
            if direction == _BUY:
                levels, prices = self._bids, bid_prices
            else:
                levels, prices = self._asks, ask_prices
            current = levels.get(price)
            if current is None:
                levels[price] = size
                insort(prices, price)
            else:
                levels[price] = current + size
        else:
            record = self._orders.get(order_id)
            if record is None:
                self._integrity_error(time_ms, seq, f"unknown order id {order_id}")
                return None
            if kind == _DELETE:
                size = record.remaining_size
            elif size > record.remaining_size:
                self._integrity_error(
                    time_ms,
                    seq,
                    f"size {size} exceeds remaining {record.remaining_size} of order {order_id}",
                )
                return None
            self._remove_order(record, size)

        best_bid = bid_prices[-1] if bid_prices else None
        best_ask = ask_prices[0] if ask_prices else None
        if best_bid == bid_before and best_ask == ask_before:
            return None
        if best_bid is not None and best_ask is not None and best_ask <= best_bid:
            if not self.crossed:
                LOGGER.debug("Crossed book at %s ms (bid %s, ask %s)", time_ms, best_bid, best_ask)
            self.crossed = True
        return Quote(time_ms, seq, best_bid, best_ask)

    def _integrity_error(self, time_ms: int, seq: int, message: str) -> None:
        text = f"seq {seq} at {time_ms} ms: {message}"
        if self.strict:
            raise BookIntegrityError(text)
        self.integrity_error_count += 1
        if len(self.integrity_errors) < MAX_RECORDED_ERRORS:
            self.integrity_errors.append(text)
        LOGGER.debug("Skipping event, %s", text)

    # ------------------------------------------------------------------
    # ladder maintenance
    # ------------------------------------------------------------------
    def _remove_order(self, record: OrderRecord, size: int) -> None:
        levels, prices = self._side(record.direction)
        remaining = levels[record.price] - size
        if remaining > 0:
            levels[record.price] = remaining
        else:
            del levels[record.price]
            del prices[bisect_left(prices, record.price)]
        record.remaining_size -= size
        if record.remaining_size <= 0:
            del self._orders[record.order_id]

    def _side(self, direction: Direction) -> Tuple[Dict[int, int], List[int]]:
        if direction == _BUY:
            return self._bids, self._bid_prices
        return self._asks, self._ask_prices

    # ------------------------------------------------------------------
    # inspection
    # ------------------------------------------------------------------
    def levels(self, direction: Direction) -> Dict[int, int]:
        """Aggregate size per price, best price first."""

        levels, prices = self._side(direction)
        ordered = reversed(prices) if direction == _BUY else prices
        return {price: levels[price] for price in ordered}

    def order(self, order_id: int) -> Optional[OrderRecord]:
        return self._orders.get(order_id)

    def live_order_count(self) -> int:
        return len(self._orders)

    def live_shares(self) -> int:
        return sum(self._bids.values()) + sum(self._asks.values())

    def snapshot(self, depth: Optional[int] = None) -> dict:
        bids = list(self.levels(Direction.BUY).items())
        asks = list(self.levels(Direction.SELL).items())
        if depth is not None:
            bids, asks = bids[:depth], asks[:depth]
        return {
            "best_bid": self.best_bid,
            "best_ask": self.best_ask,
            "bids": [[price, size] for price, size in bids],
            "asks": [[price, size] for price, size in asks],
            "live_orders": self.live_order_count(),
        }

    def dump_snapshot(self, path: str | Path, time_ms: int, depth: Optional[int] = None) -> None:
        payload = {"time_ms": time_ms, **self.snapshot(depth)}
        Path(path).write_text(json.dumps(payload, indent=2) + "\n", encoding="utf-8")


def midpoint(quote: Quote) -> float:
    """Arithmetic mean of best bid and best ask, in price units."""

    if not quote.is_two_sided:
        raise UndefinedQuoteError(f"midpoint undefined for one-sided quote at {quote.time_ms} ms")
    return (quote.best_bid + quote.best_ask) / 2  # type: ignore[operator]


def spread(quote: Quote) -> int:
    """Best ask minus best bid; non-positive for locked or crossed books."""

    if not quote.is_two_sided:
        raise UndefinedQuoteError(f"spread undefined for one-sided quote at {quote.time_ms} ms")
    return quote.best_ask - quote.best_bid  # type: ignore[operator]
