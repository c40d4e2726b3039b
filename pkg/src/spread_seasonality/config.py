"""Run configuration and environment defaults."""
from __future__ import annotations

import os
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from .models import (
    DEFAULT_TICK_SIZE,
    MS_PER_MINUTE,
    MeanMethod,
    TickCriterion,
    TradingDayBounds,
    TRepRule,
)

OUTPUT_ENV_VAR = "SPREAD_SEASONALITY_OUTPUT"
DEFAULT_OUTPUT_NAME = "spread-seasonality-output"


@dataclass(frozen=True)
class RunConfig:
    """Knobs for a batch run."""

    tick_size: int = DEFAULT_TICK_SIZE
    time_unit: str = "ms"
    bounds: TradingDayBounds = field(default_factory=TradingDayBounds)
    mean_method: MeanMethod = MeanMethod.TIME_WEIGHTED
    window_weighting: MeanMethod = MeanMethod.TIME_WEIGHTED
    t_rep_rule: TRepRule = TRepRule.GEOMETRIC
    threshold_factor: float = 1.5
    saturation_tolerance: float = 1.05
    degenerate_tolerance: float = 1.1
    large_tick_mean_ticks: float = 1.15
    tick_criterion: TickCriterion = TickCriterion.TERMINAL_SATURATION
    min_fit_elapsed_ms: float = 10 * MS_PER_MINUTE
    strict: bool = False
    jobs: int = 1
    seed: int = 0
    output_dir: Optional[Path] = None

    def validate(self) -> None:
        positive = (
            "tick_size",
            "threshold_factor",
            "saturation_tolerance",
            "degenerate_tolerance",
            "large_tick_mean_ticks",
            "jobs",
        )
        for spec in fields(self):
            if spec.name in positive and getattr(self, spec.name) <= 0:
                raise ValueError(f"{spec.name} must be positive, got {getattr(self, spec.name)!r}")
        if self.min_fit_elapsed_ms < 0:
            raise ValueError("min_fit_elapsed_ms must not be negative")
        if self.time_unit not in ("ms", "seconds"):
            raise ValueError(f"unknown time unit {self.time_unit!r}")


def default_output_dir() -> Path:
    """Return the default output directory, honouring the environment override."""

    env_path = os.getenv(OUTPUT_ENV_VAR)
    if env_path:
        return Path(env_path).expanduser().resolve(strict=False)
    return Path(DEFAULT_OUTPUT_NAME).resolve(strict=False)


def resolve_output_dir(explicit: Optional[str | Path]) -> Path:
    """Resolve the requested output directory or fall back to the default."""

    if explicit:
        return Path(explicit).expanduser().resolve(strict=False)
    return default_output_dir()
