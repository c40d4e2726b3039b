import json
import time

import _bootstrap  # noqa: F401
import numpy as np
import pytest

from spread_seasonality.book import OrderBook, midpoint, spread
from spread_seasonality.errors import BookIntegrityError, UndefinedQuoteError
from spread_seasonality.ingest import parse_event_file, read_event_columns, write_event_file
from spread_seasonality.models import Direction, EventColumns, EventKind, MarketEvent, Quote


def _event(seq, kind, order_id, size, price, direction, time_ms=None):
    return MarketEvent(time_ms if time_ms is not None else seq, seq, kind, order_id, size, price, direction)


class NaiveBook:
    """Unsorted per-price totals, rescanned for the best prices."""

    def __init__(self):
        self.orders = {}
        self.sizes = {Direction.BUY: {}, Direction.SELL: {}}

    def _change(self, direction, price, delta):
        side = self.sizes[direction]
        side[price] = side.get(price, 0) + delta
        if side[price] == 0:
            del side[price]

    def apply(self, event):
        if event.kind is EventKind.EXECUTE_HIDDEN:
            return
        if event.kind is EventKind.SUBMIT:
            self.orders[event.order_id] = [event.direction, event.price, event.size]
            self._change(event.direction, event.price, event.size)
            return
        record = self.orders[event.order_id]
        removed = record[2] if event.kind is EventKind.DELETE else event.size
        record[2] -= removed
        self._change(record[0], record[1], -removed)
        if record[2] == 0:
            del self.orders[event.order_id]

    def best(self):
        bids, asks = self.sizes[Direction.BUY], self.sizes[Direction.SELL]
        return (max(bids) if bids else None, min(asks) if asks else None)

    def levels(self, direction):
        side = self.sizes[direction]
        return [(price, side[price]) for price in sorted(side, reverse=direction is Direction.BUY)]


def _random_stream(seed, n=3000):
    rng = np.random.default_rng(seed)
    live = {}
    ids = []
    events = []
    next_id = 1

    def drop(slot):
        del live[ids[slot]]
        ids[slot] = ids[-1]
        ids.pop()

    for seq in range(n):
        if not ids or rng.random() < 0.45:
            direction = Direction.BUY if rng.random() < 0.5 else Direction.SELL
            offset = int(rng.integers(1, 20)) * 100
            price = 1_000_000 - offset if direction is Direction.BUY else 1_000_000 + offset
            size = int(rng.integers(1, 5)) * 100
            events.append(_event(seq, EventKind.SUBMIT, next_id, size, price, direction))
            live[next_id] = [direction, price, size]
            ids.append(next_id)
            next_id += 1
            continue
        slot = int(rng.integers(len(ids)))
        order_id = ids[slot]
        direction, price, size = live[order_id]
        roll = rng.random()
        if roll < 0.1:
            events.append(_event(seq, EventKind.EXECUTE_HIDDEN, 0, 100, price, direction))
        elif roll < 0.4:
            events.append(_event(seq, EventKind.DELETE, order_id, size, price, direction))
            drop(slot)
        else:
            kind = EventKind.PARTIAL_CANCEL if roll < 0.7 else EventKind.EXECUTE_VISIBLE
            amount = int(rng.integers(1, size + 1))
            events.append(_event(seq, kind, order_id, amount, price, direction))
            live[order_id][2] -= amount
            if live[order_id][2] == 0:
                drop(slot)
    return events


def _assert_matches_naive(events):
    book = OrderBook(strict=True)
    naive = NaiveBook()
    for event in events:
        book.apply_event(event)
        naive.apply(event)
        assert (book.best_bid, book.best_ask) == naive.best()
        assert list(book.levels(Direction.BUY).items()) == naive.levels(Direction.BUY)
        assert list(book.levels(Direction.SELL).items()) == naive.levels(Direction.SELL)
    assert book.integrity_error_count == 0
    assert book.live_order_count() == len(naive.orders)


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_book_matches_naive_rescan(seed):
    _assert_matches_naive(_random_stream(seed))


@pytest.mark.slow
@pytest.mark.parametrize("seed", range(100))
def test_book_matches_naive_rescan_on_long_streams(seed):
    _assert_matches_naive(_random_stream(1000 + seed, n=100_000))


def test_column_replay_matches_event_replay(power_law_day):
    _, events, _ = power_law_day
    expected = list(OrderBook().replay(events))
    book = OrderBook()
    assert list(book.replay(EventColumns.from_events(events))) == expected
    assert book.events_applied == len(events)
    assert OrderBook().apply_all(EventColumns.from_events(events)) == len(expected)


@pytest.mark.slow
def test_parse_and_replay_throughput(tmp_path, power_law_day):
    _, events, _ = power_law_day
    path = tmp_path / "day.csv"
    write_event_file(events, path)
    started = time.perf_counter()
    columns = read_event_columns(path)
    OrderBook().apply_all(columns)
    elapsed = time.perf_counter() - started
    assert len(columns) == len(events)
    assert len(events) / elapsed >= 5e5


def test_share_conservation():
    events = _random_stream(5)
    book = OrderBook(strict=True)
    book_shares = 0
    for event in events:
        if event.kind is EventKind.SUBMIT:
            book_shares += event.size
        elif event.kind in (EventKind.PARTIAL_CANCEL, EventKind.EXECUTE_VISIBLE):
            book_shares -= event.size
        elif event.kind is EventKind.DELETE:
            book_shares -= event.size
        book.apply_event(event)
    assert book.live_shares() == book_shares


def test_sample_file_quote_changes(sample_events_file):
    book = OrderBook()
    quotes = list(book.replay(parse_event_file(sample_events_file)))
    assert [(q.best_bid, q.best_ask) for q in quotes] == [
        (1001000, None),
        (1001000, 1001400),
        (1001200, 1001400),
        (1001200, 1001300),
        (1001200, 1001400),
        (1001000, 1001400),
        (1000900, 1001400),
    ]
    assert [q.seq for q in quotes] == [0, 1, 2, 4, 5, 7, 9]


def test_hidden_execution_leaves_book_untouched():
    book = OrderBook()
    book.apply_event(_event(0, EventKind.SUBMIT, 1, 100, 1000000, Direction.BUY))
    before = book.snapshot()
    assert book.apply_event(_event(1, EventKind.EXECUTE_HIDDEN, 99, 500, 1000000, Direction.BUY)) is None
    assert book.snapshot() == before


def test_delete_removes_whole_order_and_level():
    book = OrderBook()
    book.apply_event(_event(0, EventKind.SUBMIT, 1, 300, 1000000, Direction.BUY))
    book.apply_event(_event(1, EventKind.SUBMIT, 2, 100, 999900, Direction.BUY))
    quote = book.apply_event(_event(2, EventKind.DELETE, 1, 100, 1000000, Direction.BUY))
    assert quote == Quote(2, 2, 999900, None)
    assert book.order(1) is None
    assert book.levels(Direction.BUY) == {999900: 100}


def test_lenient_mode_counts_integrity_errors():
    book = OrderBook()
    book.apply_event(_event(0, EventKind.SUBMIT, 1, 100, 1000000, Direction.BUY))
    assert book.apply_event(_event(1, EventKind.DELETE, 42, 100, 1000000, Direction.BUY)) is None
    assert book.apply_event(_event(2, EventKind.PARTIAL_CANCEL, 1, 500, 1000000, Direction.BUY)) is None
    assert book.apply_event(_event(3, EventKind.SUBMIT, 1, 100, 1000100, Direction.BUY)) is None
    assert book.integrity_error_count == 3
    assert "unknown order id 42" in book.integrity_errors[0]
    assert book.levels(Direction.BUY) == {1000000: 100}


def test_strict_mode_raises():
    book = OrderBook(strict=True)
    with pytest.raises(BookIntegrityError):
        book.apply_event(_event(0, EventKind.EXECUTE_VISIBLE, 7, 100, 1000000, Direction.SELL))


def test_crossed_book_is_flagged():
    book = OrderBook()
    book.apply_event(_event(0, EventKind.SUBMIT, 1, 100, 1000000, Direction.BUY))
    quote = book.apply_event(_event(1, EventKind.SUBMIT, 2, 100, 999900, Direction.SELL))
    assert quote.is_crossed
    assert book.crossed
    assert spread(quote) == -100


def test_midpoint_and_spread_need_both_sides():
    assert midpoint(Quote(0, 0, 1001000, 1001400)) == 1001200
    assert spread(Quote(0, 0, 1001000, 1001400)) == 400
    with pytest.raises(UndefinedQuoteError):
        midpoint(Quote(0, 0, 1001000, None))
    with pytest.raises(UndefinedQuoteError):
        spread(Quote(0, 0, None, 1001400))


def test_snapshot_dump(tmp_path, sample_events_file):
    book = OrderBook()
    for event in parse_event_file(sample_events_file):
        book.apply_event(event)
    target = tmp_path / "snapshot.json"
    book.dump_snapshot(target, time_ms=34207000, depth=1)
    payload = json.loads(target.read_text())
    assert payload["best_bid"] == 1000900
    assert payload["best_ask"] == 1001400
    assert payload["bids"] == [[1000900, 300]]
    assert payload["live_orders"] == 2
