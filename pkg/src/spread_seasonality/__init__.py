"""Order book reconstruction and intraday bid-ask spread seasonality."""

from .book import OrderBook
from .config import RunConfig
from .ingest import parse_event_file, read_event_columns, write_event_file
from .models import EventColumns
from .pipeline import analyze_events, analyze_file, analyze_files
from .series import extract_spread_changes, mean_spread
from .smooth import layout_windows, normalize, smooth
from .synth import SyntheticScenario, generate_event_stream, generate_spread_series

__all__ = [
    "EventColumns",
    "OrderBook",
    "RunConfig",
    "SyntheticScenario",
    "analyze_events",
    "analyze_file",
    "analyze_files",
    "extract_spread_changes",
    "generate_event_stream",
    "generate_spread_series",
    "layout_windows",
    "mean_spread",
    "normalize",
    "parse_event_file",
    "read_event_columns",
    "smooth",
    "write_event_file",
]
