"""Synthetic generator: determinism, structure and error construction."""

import io
from datetime import timedelta

import numpy as np
import pytest

from windband.errors import ConfigError
from windband.ingest import (
    aggregate_hourly,
    align_errors,
    format_forecast_series,
    format_speed_series,
    parse_forecast_series,
    parse_speed_series,
)
from windband.synth import SyntheticSpec, generate, sample_band_errors
from windband.variability import VariabilityModel

VM = VariabilityModel(0.231, 0.197)


def _spec(**overrides):
    base = dict(
        intercept=0.231,
        slope=0.197,
        lead_bounds={1.0: (-1.0, 2.0), 2.0: (-1.5, 2.5)},
        hours=40,
        seed=5,
    )
    base.update(overrides)
    return SyntheticSpec(**base)


class TestSpecValidation:
    def test_rejects_bad_values(self):
        with pytest.raises(ConfigError):
            _spec(hours=0)
        with pytest.raises(ConfigError):
            _spec(lead_bounds={})
        with pytest.raises(ConfigError):
            _spec(lead_bounds={1.0: (2.0, -1.0)})
        with pytest.raises(ConfigError):
            _spec(lead_bounds={-1.0: (0.0, 1.0)})
        with pytest.raises(ConfigError):
            _spec(samples_per_hour=7)


class TestGenerate:
    def test_fixed_seed_reproduces_files(self):
        a = generate(_spec())
        b = generate(_spec())
        assert format_speed_series(a.series) == format_speed_series(b.series)
        assert format_forecast_series(a.forecasts) == format_forecast_series(b.forecasts)

    def test_different_seed_differs(self):
        a = generate(_spec())
        b = generate(_spec(seed=6))
        assert format_speed_series(a.series) != format_speed_series(b.series)

    def test_structure(self):
        spec = _spec()
        ds = generate(spec)
        assert len(ds.series) == spec.hours * spec.samples_per_hour
        assert len(ds.forecasts) == spec.hours * len(spec.lead_bounds)
        assert ds.series.cadence_s == 300
        stamps = [s.timestamp for s in ds.series.samples]
        assert stamps[1] - stamps[0] == timedelta(seconds=300)

    def test_round_trips_through_parsers(self):
        ds = generate(_spec())
        series = parse_speed_series(io.StringIO(format_speed_series(ds.series)))
        forecasts = parse_forecast_series(io.StringIO(format_forecast_series(ds.forecasts)))
        assert series == ds.series
        assert forecasts == list(ds.forecasts)

    def test_samples_clipped_at_zero(self):
        # mean range close to zero with a huge intercept forces truncation
        ds = generate(_spec(intercept=5.0, slope=0.0, mu_range=(3.0, 4.0)))
        assert ds.clipped_samples > 0
        assert min(s.speed for s in ds.series.samples) >= 0.0
        assert min(f.forecast_mean for f in ds.forecasts) >= 0.0

    def test_aligned_errors_are_the_generated_draws(self):
        # Realized mean minus forecast must reproduce the generator's error
        # draw up to a rounding ulp, for every hour and lead.
        spec = _spec(hours=60)
        ds = generate(spec)
        agg = aggregate_hourly(ds.series)
        assert len(agg.records) == spec.hours
        for lead, (lo, hi) in spec.lead_bounds.items():
            result = align_errors(agg.records, list(ds.forecasts), lead)
            assert len(result.errors) == spec.hours
            values = np.array([e.error for e in result.errors])
            # all errors must be plausible band draws (within 6 sigma of band)
            sigma_max = max(VM.sigma(lo), VM.sigma(hi))
            assert values.min() > lo - 6 * sigma_max
            assert values.max() < hi + 6 * sigma_max

    def test_zero_width_band_gives_pure_noise_around_zero(self):
        spec = _spec(lead_bounds={1.0: (0.0, 0.0)}, hours=400)
        ds = generate(spec)
        agg = aggregate_hourly(ds.series)
        result = align_errors(agg.records, list(ds.forecasts), 1.0)
        values = np.array([e.error for e in result.errors])
        # N(0, sigma(0)) noise: sigma(0) = 0.231
        assert abs(values.mean()) < 5 * 0.231 / np.sqrt(values.size)
        assert values.std() == pytest.approx(0.231, rel=0.25)


class TestSampleBandErrors:
    def test_moments_match_mixture_theory(self):
        rng = np.random.default_rng(42)
        lo, hi = -1.0, 2.0
        draws = sample_band_errors(rng, 200_000, lo, hi, VM)
        # mean of uniform mixture; variance = uniform var + mean component var
        u = np.linspace(lo, hi, 20_001)
        expected_var = (hi - lo) ** 2 / 12 + np.mean(VM.sigma(u) ** 2)
        assert draws.mean() == pytest.approx((lo + hi) / 2, abs=0.02)
        assert draws.var() == pytest.approx(expected_var, rel=0.02)

    def test_degenerate_band(self):
        rng = np.random.default_rng(1)
        draws = sample_band_errors(rng, 10_000, 0.5, 0.5, VM)
        assert draws.mean() == pytest.approx(0.5, abs=0.02)
        assert draws.std() == pytest.approx(VM.sigma(0.5), rel=0.05)

    def test_inverted_bounds_rejected(self):
        rng = np.random.default_rng(1)
        with pytest.raises(ConfigError):
            sample_band_errors(rng, 10, 1.0, -1.0, VM)
