"""Measurement and forecast ingestion.

Parses the two CSV formats consumed by the pipeline, conditions a series
to a season/hour window, aggregates 5-minute samples to hourly records,
and aligns realized hourly means with forecasts to produce error samples.

Measurements CSV: header ``timestamp,speed_mps`` (ISO-8601 UTC, m/s).
Forecasts CSV:    header ``target_hour,lead_hours,forecast_mps``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from datetime import datetime, timezone
from typing import Iterable

from .errors import (
    DuplicateKeyError,
    EmptyJoinError,
    EmptySelectionError,
    ConfigError,
    InputError,
    MalformedRowError,
)

SPEED_HEADER = "timestamp,speed_mps"
FORECAST_HEADER = "target_hour,lead_hours,forecast_mps"


# ---------------------------------------------------------------------------
# Records


@dataclass(frozen=True)
class WindSpeedSample:
    timestamp: datetime
    speed: float

    def __post_init__(self):
        if not math.isfinite(self.speed) or self.speed < 0:
            raise ValueError(f"speed must be finite and >= 0, got {self.speed}")


@dataclass(frozen=True)
class WindSpeedSeries:
    """Ordered 5-minute (by default) wind-speed samples.

    Timestamps must be strictly increasing; one nominal cadence applies to
    the whole series.
    """

    samples: tuple[WindSpeedSample, ...]
    cadence_s: int = 300

    def __post_init__(self):
        for prev, cur in zip(self.samples, self.samples[1:]):
            if cur.timestamp <= prev.timestamp:
                raise ValueError(
                    f"timestamps not strictly increasing at {cur.timestamp.isoformat()}"
                )

    def __len__(self):
        return len(self.samples)


@dataclass(frozen=True)
class HourlyRecord:
    """One clock hour: its mean speed and the samples that produced it."""

    hour_start: datetime
    mean_speed: float
    intra_samples: tuple[float, ...]
    deviations: tuple[float, ...] = field(repr=False)

    def __post_init__(self):
        n = len(self.intra_samples)
        if n == 0:
            raise ValueError("hourly record needs at least one sample")
        if abs(math.fsum(self.intra_samples) / n - self.mean_speed) > 1e-9:
            raise ValueError("mean_speed inconsistent with intra_samples")
        if abs(math.fsum(self.deviations) / n) > 1e-9:
            raise ValueError("deviations must have zero mean")


@dataclass(frozen=True)
class ForecastRecord:
    target_hour: datetime
    lead_hours: float
    forecast_mean: float

    def __post_init__(self):
        if self.lead_hours < 0:
            raise ValueError(f"lead_hours must be >= 0, got {self.lead_hours}")
        if not math.isfinite(self.forecast_mean) or self.forecast_mean < 0:
            raise ValueError(f"forecast_mean must be finite and >= 0, got {self.forecast_mean}")


@dataclass(frozen=True)
class ErrorSample:
    """Realized minus forecast hourly-mean speed at one lead time."""

    target_hour: datetime
    lead_hours: float
    error: float


@dataclass(frozen=True)
class WindowFilter:
    """Season/hour conditioning window: calendar months plus a half-open
    hour-of-day interval."""

    months: frozenset[int]
    hour_range: tuple[int, int] = (0, 24)

    def __post_init__(self):
        if not self.months:
            raise ConfigError("months must be nonempty")
        if any(m < 1 or m > 12 for m in self.months):
            raise ConfigError(f"months out of range: {sorted(self.months)}")
        lo, hi = self.hour_range
        if not (0 <= lo < hi <= 24):
            raise ConfigError(f"hour_range must satisfy 0 <= lo < hi <= 24, got {self.hour_range}")

    def contains(self, ts: datetime) -> bool:
        lo, hi = self.hour_range
        return ts.month in self.months and lo <= ts.hour < hi


@dataclass(frozen=True)
class AggregationResult:
    records: tuple[HourlyRecord, ...]
    dropped_hours: int


@dataclass(frozen=True)
class AlignmentResult:
    errors: tuple[ErrorSample, ...]
    unmatched_hours: int
    unmatched_forecasts: int


# ---------------------------------------------------------------------------
# Parsing helpers


def _parse_timestamp(text: str, line_no: int) -> datetime:
    raw = text.strip()
    if raw.endswith("Z"):
        raw = raw[:-1] + "+00:00"
    try:
        ts = datetime.fromisoformat(raw)
    except ValueError:
        raise MalformedRowError(line_no, f"bad timestamp {text!r}") from None
    if ts.tzinfo is None:
        return ts.replace(tzinfo=timezone.utc)
    return ts.astimezone(timezone.utc)


def _parse_float(text: str, name: str, line_no: int) -> float:
    try:
        value = float(text)
    except ValueError:
        raise MalformedRowError(line_no, f"bad {name} {text!r}") from None
    if not math.isfinite(value):
        raise MalformedRowError(line_no, f"{name} must be finite, got {text!r}")
    return value


def _rows(stream: Iterable[str], header: str, n_fields: int):
    """Yield (line_no, fields) for data rows, after validating the header."""
    it = iter(stream)
    try:
        first = next(it)
    except StopIteration:
        raise InputError("empty file") from None
    if first.strip() != header:
        raise InputError(f"expected header {header!r}, got {first.strip()!r}")
    saw_data = False
    for line_no, line in enumerate(it, start=2):
        if not line.strip():
            continue
        fields = [f.strip() for f in line.strip().split(",")]
        if len(fields) != n_fields:
            raise MalformedRowError(line_no, f"expected {n_fields} fields, got {len(fields)}")
        saw_data = True
        yield line_no, fields
    if not saw_data:
        raise InputError("no data rows")


def format_timestamp(ts: datetime) -> str:
    return ts.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


# ---------------------------------------------------------------------------
# Operations


def parse_speed_series(stream: Iterable[str], cadence_s: int = 300) -> WindSpeedSeries:
    """Parse a measurements CSV into a series sorted by timestamp.

    Rows with negative, non-finite or unparsable speeds raise
    :class:`MalformedRowError` with the offending line number; duplicate
    timestamps raise :class:`DuplicateKeyError`.
    """
    samples = []
    for line_no, (ts_text, speed_text) in _rows(stream, SPEED_HEADER, 2):
        ts = _parse_timestamp(ts_text, line_no)
        speed = _parse_float(speed_text, "speed", line_no)
        if speed < 0:
            raise MalformedRowError(line_no, f"negative speed {speed}")
        samples.append(WindSpeedSample(ts, speed))
    samples.sort(key=lambda s: s.timestamp)
    for prev, cur in zip(samples, samples[1:]):
        if cur.timestamp == prev.timestamp:
            raise DuplicateKeyError(f"duplicate timestamp {format_timestamp(cur.timestamp)}")
    return WindSpeedSeries(tuple(samples), cadence_s)


def format_speed_series(series: WindSpeedSeries) -> str:
    lines = [SPEED_HEADER]
    lines += [f"{format_timestamp(s.timestamp)},{s.speed!r}" for s in series.samples]
    return "\n".join(lines) + "\n"


def parse_forecast_series(stream: Iterable[str]) -> list[ForecastRecord]:
    """Parse a forecasts CSV, sorted by (target_hour, lead_hours)."""
    records = []
    for line_no, (ts_text, lead_text, mean_text) in _rows(stream, FORECAST_HEADER, 3):
        ts = _parse_timestamp(ts_text, line_no)
        lead = _parse_float(lead_text, "lead", line_no)
        mean = _parse_float(mean_text, "forecast", line_no)
        if lead < 0:
            raise MalformedRowError(line_no, f"negative lead time {lead}")
        if mean < 0:
            raise MalformedRowError(line_no, f"negative forecast {mean}")
        records.append(ForecastRecord(ts, lead, mean))
    records.sort(key=lambda r: (r.target_hour, r.lead_hours))
    for prev, cur in zip(records, records[1:]):
        if (prev.target_hour, prev.lead_hours) == (cur.target_hour, cur.lead_hours):
            raise DuplicateKeyError(
                f"duplicate forecast for {format_timestamp(cur.target_hour)} "
                f"at lead {cur.lead_hours}"
            )
    return records


def format_forecast_series(records: Iterable[ForecastRecord]) -> str:
    lines = [FORECAST_HEADER]
    lines += [
        f"{format_timestamp(r.target_hour)},{r.lead_hours!r},{r.forecast_mean!r}"
        for r in records
    ]
    return "\n".join(lines) + "\n"


def filter_window(series: WindSpeedSeries, window: WindowFilter) -> WindSpeedSeries:
    """Retain exactly the samples inside the month set and hour interval."""
    kept = tuple(s for s in series.samples if window.contains(s.timestamp))
    if not kept:
        raise EmptySelectionError(
            f"no samples in months {sorted(window.months)} and hours {window.hour_range}"
        )
    return WindSpeedSeries(kept, series.cadence_s)


def aggregate_hourly(series: WindSpeedSeries, min_samples_per_hour: int = 10) -> AggregationResult:
    """Group samples into clock hours (UTC, half-open [h, h+1)) and average.

    Hours with fewer than ``min_samples_per_hour`` samples are dropped and
    counted, not treated as errors.
    """
    if 3600 % series.cadence_s != 0:
        raise ConfigError(f"cadence {series.cadence_s}s does not divide 3600s")
    groups: dict[datetime, list[float]] = {}
    for s in series.samples:
        hour = s.timestamp.replace(minute=0, second=0, microsecond=0)
        groups.setdefault(hour, []).append(s.speed)

    records = []
    dropped = 0
    for hour in sorted(groups):
        speeds = groups[hour]
        if len(speeds) < min_samples_per_hour:
            dropped += 1
            continue
        mean = math.fsum(speeds) / len(speeds)
        records.append(
            HourlyRecord(
                hour_start=hour,
                mean_speed=mean,
                intra_samples=tuple(speeds),
                deviations=tuple(w - mean for w in speeds),
            )
        )
    return AggregationResult(tuple(records), dropped)


def align_errors(
    hourly: Iterable[HourlyRecord],
    forecasts: Iterable[ForecastRecord],
    lead_hours: float,
) -> AlignmentResult:
    """Join realized hourly means with forecasts at one lead time.

    Emits error = realized mean - forecast mean for every hour present on
    both sides; unmatched rows are counted, a fully empty join raises.
    """
    if lead_hours < 0:
        raise ConfigError(f"lead_hours must be >= 0, got {lead_hours}")
    at_lead = {f.target_hour: f for f in forecasts if f.lead_hours == lead_hours}
    errors = []
    unmatched_hours = 0
    for record in hourly:
        fc = at_lead.pop(record.hour_start, None)
        if fc is None:
            unmatched_hours += 1
            continue
        errors.append(
            ErrorSample(record.hour_start, lead_hours, record.mean_speed - fc.forecast_mean)
        )
    if not errors:
        raise EmptyJoinError(f"no realized hour matches a forecast at lead {lead_hours}")
    return AlignmentResult(tuple(errors), unmatched_hours, len(at_lead))
