"""Parsing and validation of normalized order-flow event files.

One event per line, comma separated::

    time,kind,order_id,size,price,direction

``kind`` codes are 1=submit, 2=partial cancel, 3=delete, 4=visible execution,
5=hidden execution; ``direction`` is 1 for buy and -1 for sell. Prices are
integers in units of 1e-4 dollars. ``time`` is either integer milliseconds
since midnight or decimal seconds since midnight, selected by
:class:`EventFileFormat`. Every field is a plain decimal number: no sign
other than a leading ``-``, no ``_`` separators, no exponents.

Millisecond files are read in one vectorised pass into :class:`EventColumns`;
the line parser is the reference and produces the line-numbered errors.
"""
from __future__ import annotations

import io
import logging
import re
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import IO, Dict, Iterable, Iterator, List, Sequence, Tuple, TypeVar, Union

import numpy as np

from .errors import EventFormatError, EventOrderingError, EventParseError
from .models import (
    DIRECTIONS_BY_CODE,
    KINDS_BY_CODE,
    EventColumns,
    EventKind,
    MarketEvent,
    TradingDayBounds,
)

LOGGER = logging.getLogger(__name__)

COLUMNS = ("time", "kind", "order_id", "size", "price", "direction")

_KIND_CODES = np.array(sorted(KINDS_BY_CODE), dtype=np.int64)
_DIRECTION_CODES = np.array(sorted(DIRECTIONS_BY_CODE), dtype=np.int64)
_THOUSAND = Decimal(1000)
_DECIMAL_SECONDS = re.compile(r"-?[0-9]+(?:\.[0-9]+)?")
# Bytes a millisecond file may contain besides the delimiter.
_PLAIN_BYTES = b"0123456789-\r\n\t "

EventSource = Union[str, Path, IO[bytes], IO[str], Iterable[str]]
Events = TypeVar("Events", EventColumns, Sequence[MarketEvent])


@dataclass(frozen=True)
class EventFileFormat:
    time_unit: str = "ms"
    delimiter: str = ","

    def __post_init__(self) -> None:
        if self.time_unit not in ("ms", "seconds"):
            raise ValueError(f"unknown time unit {self.time_unit!r}")


DEFAULT_FORMAT = EventFileFormat()


def _parse_int(text: str, name: str, line_number: int | None) -> int:
    digits = text[1:] if text.startswith("-") else text
    if not (digits.isascii() and digits.isdigit()):
        raise EventParseError(f"non-numeric {name} {text!r}", line_number)
    return int(text)


def _parse_time(text: str, fmt: EventFileFormat, line_number: int | None) -> int:
    if fmt.time_unit == "ms":
        return _parse_int(text, "time", line_number)
    if not _DECIMAL_SECONDS.fullmatch(text):
        raise EventParseError(f"non-numeric time {text!r}", line_number)
    seconds = Decimal(text)
    return int((seconds * _THOUSAND).to_integral_value(rounding=ROUND_HALF_UP))


def parse_event_line(
    line: str,
    seq: int,
    fmt: EventFileFormat = DEFAULT_FORMAT,
    line_number: int | None = None,
) -> MarketEvent:
    """Parse a single event line; ``seq`` is its position within the file."""

    parts = [part.strip() for part in line.strip().split(fmt.delimiter)]
    if len(parts) != len(COLUMNS):
        raise EventParseError(
            f"expected {len(COLUMNS)} columns, found {len(parts)}", line_number
        )
    time_ms = _parse_time(parts[0], fmt, line_number)
    kind_code, order_id, size, price, direction_code = (
        _parse_int(text, name, line_number) for name, text in zip(COLUMNS[1:], parts[1:])
    )

    kind = KINDS_BY_CODE.get(kind_code)
    if kind is None:
        raise EventFormatError(f"unknown event kind {kind_code}", line_number)
    direction = DIRECTIONS_BY_CODE.get(direction_code)
    if direction is None:
        raise EventFormatError(f"unknown direction {direction_code}", line_number)
    if time_ms < 0:
        raise EventFormatError(f"negative time {parts[0]!r}", line_number)
    if size <= 0:
        raise EventFormatError(f"size must be positive, got {size}", line_number)
    if price <= 0:
        raise EventFormatError(f"price must be positive, got {price}", line_number)
    return MarketEvent(time_ms, seq, kind, order_id, size, price, direction)


def iter_events(
    lines: Iterable[str | bytes], fmt: EventFileFormat = DEFAULT_FORMAT
) -> Iterator[MarketEvent]:
    """Yield events in file order, enforcing non-decreasing time stamps."""

    seq = 0
    last_time = -1
    for line_number, raw_line in enumerate(lines, start=1):
        line = raw_line.decode("ascii", errors="replace") if isinstance(raw_line, bytes) else raw_line
        if not line.strip():
            continue
        event = parse_event_line(line, seq, fmt, line_number)
        if event.time_ms < last_time:
            raise EventOrderingError(
                f"time {event.time_ms} ms precedes previous event at {last_time} ms",
                line_number,
            )
        last_time = event.time_ms
        seq += 1
        yield event


def _nth_event_line(text: str, row: int) -> Tuple[int, str]:
    seen = -1
    for line_number, line in enumerate(text.splitlines(), start=1):
        if line.strip():
            seen += 1
            if seen == row:
                return line_number, line
    raise IndexError(f"no event row {row}")


def _check_columns(columns: EventColumns, text: str, fmt: EventFileFormat) -> None:
    """Raise the line parser's error for the first row that breaks a field rule or goes back in time."""

    invalid = (
        ~np.isin(columns.kind, _KIND_CODES)
        | ~np.isin(columns.direction, _DIRECTION_CODES)
        | (columns.time_ms < 0)
        | (columns.size <= 0)
        | (columns.price <= 0)
    )
    invalid[1:] |= np.diff(columns.time_ms) < 0
    bad_rows = np.flatnonzero(invalid)
    if bad_rows.size == 0:
        return
    row = int(bad_rows[0])
    line_number, line = _nth_event_line(text, row)
    event = parse_event_line(line, row, fmt, line_number)
    raise EventOrderingError(
        f"time {event.time_ms} ms precedes previous event at {int(columns.time_ms[row - 1])} ms",
        line_number,
    )


def _columns_from_bytes(data: bytes, fmt: EventFileFormat) -> EventColumns:
    text = data.decode("ascii", errors="replace")
    if not text.strip():
        return EventColumns.empty()
    delimiter = fmt.delimiter.encode("ascii", errors="replace")
    if fmt.time_unit == "ms" and not data.translate(None, _PLAIN_BYTES + delimiter):
        try:
            table = np.loadtxt(
                io.StringIO(text), delimiter=fmt.delimiter, dtype=np.int64, ndmin=2, comments=None
            )
        except (ValueError, OverflowError):
            LOGGER.debug("Vectorised parse rejected the file, parsing line by line")
        else:
            if table.shape[1] == len(COLUMNS):
                columns = EventColumns.from_table(table)
                _check_columns(columns, text, fmt)
                return columns
    return EventColumns.from_events(iter_events(text.splitlines(), fmt))


def read_event_columns(source: EventSource, fmt: EventFileFormat = DEFAULT_FORMAT) -> EventColumns:
    """Parse a whole event file into column arrays.

    ``source`` is a path, an open byte or text stream, or an iterable of
    lines. Errors are the same as for :func:`iter_events`.
    """

    if isinstance(source, (str, Path)):
        path = Path(source)
        LOGGER.debug("Parsing events from %s", path)
        data: bytes | str = path.read_bytes()
    elif hasattr(source, "read"):
        data = source.read()  # type: ignore[union-attr]
    else:
        return EventColumns.from_events(iter_events(source, fmt))  # type: ignore[arg-type]
    if isinstance(data, str):
        data = data.encode("ascii", errors="replace")
    return _columns_from_bytes(data, fmt)


def parse_event_file(source: EventSource, fmt: EventFileFormat = DEFAULT_FORMAT) -> List[MarketEvent]:
    """Parse a whole event file given as a path, an open stream or lines."""

    if not isinstance(source, (str, Path)) and not hasattr(source, "read"):
        return list(iter_events(source, fmt))  # type: ignore[arg-type]
    return list(read_event_columns(source, fmt))


def _format_time(time_ms: int, fmt: EventFileFormat) -> str:
    if fmt.time_unit == "ms":
        return str(time_ms)
    seconds, millis = divmod(time_ms, 1000)
    return f"{seconds}.{millis:03d}"


def format_event(event: MarketEvent, fmt: EventFileFormat = DEFAULT_FORMAT) -> str:
    """Render an event as one line of the text format (no newline)."""

    fields = (
        _format_time(event.time_ms, fmt),
        str(int(event.kind)),
        str(event.order_id),
        str(event.size),
        str(event.price),
        str(int(event.direction)),
    )
    return fmt.delimiter.join(fields)


def write_event_file(
    events: Iterable[MarketEvent],
    destination: str | Path | IO[str],
    fmt: EventFileFormat = DEFAULT_FORMAT,
) -> None:
    if isinstance(destination, (str, Path)):
        path = Path(destination)
        if path.parent != Path(".") and not path.parent.exists():
            path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", encoding="ascii", newline="\n") as handle:
            write_event_file(events, handle, fmt)
        return
    for event in events:
        destination.write(format_event(event, fmt))
        destination.write("\n")


def dumps_events(events: Iterable[MarketEvent], fmt: EventFileFormat = DEFAULT_FORMAT) -> str:
    buffer = io.StringIO()
    write_event_file(events, buffer, fmt)
    return buffer.getvalue()


def clip_to_trading_hours(
    events: Events, bounds: TradingDayBounds = TradingDayBounds()
) -> Tuple[Events, Events]:
    """Split events into pre-market and in-hours partitions.

    Pre-market events seed the book; events after the close are dropped.
    :class:`EventColumns` input is cut with ``searchsorted`` and comes back
    as columns, anything else as lists.
    """

    if isinstance(events, EventColumns):
        pre_market, in_hours, after = events.split_at(bounds.t0_ms, bounds.te_ms + 1)
        if len(after):
            LOGGER.debug("Dropped %s events after the close", len(after))
        return pre_market, in_hours

    pre_market_list: List[MarketEvent] = []
    in_hours_list: List[MarketEvent] = []
    after_close = 0
    for event in events:
        if event.time_ms < bounds.t0_ms:
            pre_market_list.append(event)
        elif event.time_ms <= bounds.te_ms:
            in_hours_list.append(event)
        else:
            after_close += 1
    if after_close:
        LOGGER.debug("Dropped %s events after the close", after_close)
    return pre_market_list, in_hours_list  # type: ignore[return-value]


def count_kinds(events: Iterable[MarketEvent]) -> Dict[EventKind, int]:
    if isinstance(events, EventColumns):
        return events.kind_counts()
    counts = Counter(event.kind for event in events)
    return {kind: counts.get(kind, 0) for kind in EventKind}
