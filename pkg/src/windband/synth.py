"""Synthetic dataset generation with known ground truth.

Generates measurement and forecast files whose downstream fits have a
known answer: intra-hour samples are Gaussian around a drawn hourly mean
with std from a chosen affine law, and forecast errors are drawn from the
uniform-mean Gaussian band with chosen per-lead bounds. Everything is
deterministic under a fixed seed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from datetime import datetime, timedelta, timezone

import numpy as np

from .errors import ConfigError
from .ingest import ForecastRecord, WindSpeedSample, WindSpeedSeries
from .variability import VariabilityModel

DEFAULT_START = datetime(2024, 1, 1, tzinfo=timezone.utc)


@dataclass(frozen=True)
class SyntheticSpec:
    """Ground truth for a synthetic run.

    ``lead_bounds`` maps lead time (hours) to the true (mu_minus, mu_plus)
    of the error band at that lead.
    """

    intercept: float
    slope: float
    lead_bounds: dict[float, tuple[float, float]]
    hours: int
    seed: int = 0
    mu_range: tuple[float, float] = (3.0, 20.0)
    samples_per_hour: int = 12
    start: datetime = DEFAULT_START
    sigma_floor: float = 1e-3
    domain: tuple[float, float] = (0.0, 25.0)

    def __post_init__(self):
        if self.hours < 1:
            raise ConfigError(f"hours must be >= 1, got {self.hours}")
        if not self.lead_bounds:
            raise ConfigError("lead_bounds must be nonempty")
        for lead, (lo, hi) in self.lead_bounds.items():
            if lead <= 0:
                raise ConfigError(f"lead must be positive, got {lead}")
            if lo > hi:
                raise ConfigError(f"lead {lead}: mu_minus {lo} exceeds mu_plus {hi}")
        if not self.mu_range[0] < self.mu_range[1]:
            raise ConfigError(f"bad mu_range {self.mu_range}")
        if 3600 % self.samples_per_hour != 0:
            raise ConfigError("samples_per_hour must divide 3600")

    def law(self) -> VariabilityModel:
        return VariabilityModel(
            self.intercept, self.slope, domain=self.domain, sigma_floor=self.sigma_floor
        )


@dataclass(frozen=True)
class SyntheticDataset:
    series: WindSpeedSeries
    forecasts: tuple[ForecastRecord, ...]
    clipped_samples: int = 0
    clipped_forecasts: int = 0


def sample_band_errors(rng: np.random.Generator, n: int, mu_minus: float,
                       mu_plus: float, vm: VariabilityModel) -> np.ndarray:
    """Draw ``n`` errors from the uniform-mean Gaussian band: a uniform
    component mean, then Gaussian noise with std from the law at that mean."""
    if mu_minus > mu_plus:
        raise ConfigError(f"mu_minus {mu_minus} exceeds mu_plus {mu_plus}")
    u = rng.uniform(mu_minus, mu_plus, n) if mu_plus > mu_minus else np.full(n, mu_minus)
    return u + rng.standard_normal(n) * vm.sigma(u)


def generate(spec: SyntheticSpec) -> SyntheticDataset:
    """Generate one synthetic measurement series plus per-lead forecasts.

    Intra-hour samples are clipped at zero (counted, not redrawn); the
    forecast for each hour is the realized hourly mean minus a fresh band
    error draw, so the aligned errors follow the band density exactly.
    Forecasts that would go negative are clamped at zero and counted.
    """
    rng = np.random.default_rng(spec.seed)
    vm = spec.law()
    cadence = 3600 // spec.samples_per_hour
    leads = sorted(spec.lead_bounds)

    samples = []
    forecasts = []
    clipped_samples = 0
    clipped_forecasts = 0
    for i in range(spec.hours):
        hour_start = spec.start + timedelta(hours=i)
        mu_t = rng.uniform(*spec.mu_range)
        draws = mu_t + rng.standard_normal(spec.samples_per_hour) * vm.sigma(mu_t)
        clipped_samples += int(np.sum(draws < 0))
        draws = np.maximum(draws, 0.0)
        for j, w in enumerate(draws):
            samples.append(WindSpeedSample(hour_start + timedelta(seconds=j * cadence), float(w)))
        realized = math.fsum(float(w) for w in draws) / len(draws)
        for lead in leads:
            lo, hi = spec.lead_bounds[lead]
            error = float(sample_band_errors(rng, 1, lo, hi, vm)[0])
            forecast = realized - error
            if forecast < 0:
                forecast = 0.0
                clipped_forecasts += 1
            forecasts.append(ForecastRecord(hour_start, float(lead), forecast))

    return SyntheticDataset(
        series=WindSpeedSeries(tuple(samples), cadence_s=cadence),
        forecasts=tuple(forecasts),
        clipped_samples=clipped_samples,
        clipped_forecasts=clipped_forecasts,
    )
