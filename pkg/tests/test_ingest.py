"""Parsing, windowing, hourly aggregation and forecast alignment."""

import io
from datetime import datetime, timezone

import pytest

from windband.errors import (
    DuplicateKeyError,
    EmptyJoinError,
    EmptySelectionError,
    ConfigError,
    InputError,
    MalformedRowError,
)
from windband.ingest import (
    ForecastRecord,
    WindowFilter,
    WindSpeedSample,
    WindSpeedSeries,
    aggregate_hourly,
    align_errors,
    filter_window,
    format_forecast_series,
    format_speed_series,
    parse_forecast_series,
    parse_speed_series,
)


def _utc(*args):
    return datetime(*args, tzinfo=timezone.utc)


def _series(rows):
    return parse_speed_series(io.StringIO("timestamp,speed_mps\n" + "\n".join(rows) + "\n"))


class TestParseSpeedSeries:
    def test_single_row(self):
        series = parse_speed_series(io.StringIO("timestamp,speed_mps\n2024-01-05T00:00:00Z,7.2\n"))
        assert len(series) == 1
        assert series.samples[0] == WindSpeedSample(_utc(2024, 1, 5), 7.2)

    def test_out_of_order_rows_sorted(self):
        series = _series(["2024-01-05T00:10:00Z,5.0", "2024-01-05T00:05:00Z,4.0"])
        assert [s.speed for s in series.samples] == [4.0, 5.0]

    def test_negative_speed_rejected_with_line_number(self):
        with pytest.raises(MalformedRowError) as err:
            _series(["2024-01-05T00:00:00Z,7.2", "2024-01-05T00:05:00Z,-3.0"])
        assert err.value.line_no == 3

    def test_non_numeric_speed_rejected(self):
        with pytest.raises(MalformedRowError):
            _series(["2024-01-05T00:00:00Z,abc"])

    def test_bad_timestamp_rejected(self):
        with pytest.raises(MalformedRowError):
            _series(["not-a-time,1.0"])

    def test_duplicate_timestamp_rejected(self):
        with pytest.raises(DuplicateKeyError):
            _series(["2024-01-05T00:00:00Z,1.0", "2024-01-05T00:00:00Z,2.0"])

    def test_empty_file_rejected(self):
        with pytest.raises(InputError):
            parse_speed_series(io.StringIO(""))
        with pytest.raises(InputError):
            parse_speed_series(io.StringIO("timestamp,speed_mps\n"))

    def test_wrong_header_rejected(self):
        with pytest.raises(InputError):
            parse_speed_series(io.StringIO("time,speed\n2024-01-05T00:00:00Z,1.0\n"))

    def test_naive_timestamps_treated_as_utc(self):
        series = _series(["2024-01-05T00:00:00,3.3"])
        assert series.samples[0].timestamp == _utc(2024, 1, 5)

    def test_round_trip(self):
        series = _series(
            ["2024-01-05T00:00:00Z,7.2", "2024-01-05T00:05:00Z,0.123456789012345",
             "2024-01-05T00:10:00Z,19.0"]
        )
        again = parse_speed_series(io.StringIO(format_speed_series(series)))
        assert again == series


class TestParseForecasts:
    def test_single_row(self):
        records = parse_forecast_series(
            io.StringIO("target_hour,lead_hours,forecast_mps\n2024-01-05T01:00:00Z,1,9.5\n")
        )
        assert records == [ForecastRecord(_utc(2024, 1, 5, 1), 1.0, 9.5)]

    def test_negative_lead_rejected(self):
        with pytest.raises(MalformedRowError):
            parse_forecast_series(
                io.StringIO("target_hour,lead_hours,forecast_mps\n2024-01-05T01:00:00Z,-2,9.5\n")
            )

    def test_duplicate_target_lead_rejected(self):
        body = "2024-01-05T01:00:00Z,1,9.5\n2024-01-05T01:00:00Z,1,9.6\n"
        with pytest.raises(DuplicateKeyError):
            parse_forecast_series(io.StringIO("target_hour,lead_hours,forecast_mps\n" + body))

    def test_sorted_by_target_then_lead(self):
        body = (
            "2024-01-05T02:00:00Z,1,9.5\n"
            "2024-01-05T01:00:00Z,2,8.0\n"
            "2024-01-05T01:00:00Z,1,8.5\n"
        )
        records = parse_forecast_series(io.StringIO("target_hour,lead_hours,forecast_mps\n" + body))
        keys = [(r.target_hour, r.lead_hours) for r in records]
        assert keys == sorted(keys)

    def test_round_trip(self):
        records = parse_forecast_series(
            io.StringIO("target_hour,lead_hours,forecast_mps\n2024-01-05T01:00:00Z,1.0,9.5\n")
        )
        again = parse_forecast_series(io.StringIO(format_forecast_series(records)))
        assert again == records


class TestFilterWindow:
    def test_disjoint_window_raises(self):
        series = _series(["2024-07-01T10:00:00Z,5.0"])
        with pytest.raises(EmptySelectionError):
            filter_window(series, WindowFilter(frozenset({12, 1, 2}), (0, 4)))

    def test_identity_window(self):
        series = _series(["2024-07-01T10:00:00Z,5.0", "2024-12-01T23:00:00Z,6.0"])
        out = filter_window(series, WindowFilter(frozenset(range(1, 13)), (0, 24)))
        assert out == series

    def test_winter_night_selection_on_mixed_fixture(self):
        # 10-row fixture; expected survivors enumerated by hand.
        rows = [
            ("2023-12-15T00:00:00Z,1.0", True),   # Dec, hour 0
            ("2023-12-15T03:55:00Z,2.0", True),   # Dec, hour 3
            ("2023-12-15T04:00:00Z,3.0", False),  # hour 4 excluded (half-open)
            ("2024-01-10T01:30:00Z,4.0", True),   # Jan, hour 1
            ("2024-02-29T02:00:00Z,5.0", True),   # Feb, hour 2
            ("2024-03-01T00:00:00Z,6.0", False),  # March
            ("2024-06-20T00:00:00Z,7.0", False),  # June
            ("2024-12-31T23:59:00Z,8.0", False),  # Dec but hour 23
            ("2025-01-01T00:00:00Z,9.0", True),   # next year's Jan, hour 0
            ("2025-02-01T03:00:00Z,10.0", True),  # Feb, hour 3
        ]
        series = _series([r for r, _ in rows])
        out = filter_window(series, WindowFilter(frozenset({12, 1, 2}), (0, 4)))
        assert [s.speed for s in out.samples] == [
            float(r.split(",")[1]) for r, keep in rows if keep
        ]

    def test_idempotent(self):
        series = _series(
            ["2023-12-15T00:00:00Z,1.0", "2024-03-01T12:00:00Z,2.0", "2024-01-02T03:00:00Z,3.0"]
        )
        window = WindowFilter(frozenset({12, 1, 2}), (0, 4))
        once = filter_window(series, window)
        twice = filter_window(once, window)
        assert once == twice

    def test_bad_window_config(self):
        with pytest.raises(ConfigError):
            WindowFilter(frozenset(), (0, 4))
        with pytest.raises(ConfigError):
            WindowFilter(frozenset({1}), (4, 4))
        with pytest.raises(ConfigError):
            WindowFilter(frozenset({1}), (0, 25))


class TestAggregateHourly:
    def _hour_series(self, speeds, start=_utc(2024, 1, 5)):
        samples = tuple(
            WindSpeedSample(start.replace(minute=5 * i % 60, hour=start.hour + (5 * i) // 60), s)
            for i, s in enumerate(speeds)
        )
        return WindSpeedSeries(samples)

    def test_constant_hour(self):
        result = aggregate_hourly(self._hour_series([5.0] * 12))
        assert len(result.records) == 1
        rec = result.records[0]
        assert rec.mean_speed == 5.0
        assert all(d == 0.0 for d in rec.deviations)

    def test_symmetric_split(self):
        result = aggregate_hourly(self._hour_series([4.0] * 6 + [6.0] * 6))
        rec = result.records[0]
        assert rec.mean_speed == pytest.approx(5.0, abs=1e-12)
        assert sorted(set(rec.deviations)) == [-1.0, 1.0]

    def test_incomplete_hour_dropped_and_counted(self):
        result = aggregate_hourly(self._hour_series([5.0] * 7), min_samples_per_hour=10)
        assert result.records == ()
        assert result.dropped_hours == 1

    def test_boundary_sample_belongs_to_starting_hour(self):
        samples = tuple(
            WindSpeedSample(_utc(2024, 1, 5, 0, 5 * i), 4.0) for i in range(12)
        ) + (WindSpeedSample(_utc(2024, 1, 5, 1, 0), 9.0),)
        result = aggregate_hourly(WindSpeedSeries(samples), min_samples_per_hour=1)
        assert [r.hour_start for r in result.records] == [_utc(2024, 1, 5, 0), _utc(2024, 1, 5, 1)]
        assert result.records[1].mean_speed == 9.0

    def test_cadence_must_divide_hour(self):
        series = WindSpeedSeries((WindSpeedSample(_utc(2024, 1, 5), 1.0),), cadence_s=7)
        with pytest.raises(ConfigError):
            aggregate_hourly(series)

    def test_mean_invariants(self):
        import numpy as np

        rng = np.random.default_rng(0)
        samples = []
        t = _utc(2024, 1, 1)
        for hour in range(20):
            for i in range(12):
                samples.append(
                    WindSpeedSample(
                        t.replace(day=1 + hour // 24, hour=hour % 24, minute=5 * i),
                        float(rng.uniform(0, 20)),
                    )
                )
        result = aggregate_hourly(WindSpeedSeries(tuple(samples)))
        assert len(result.records) == 20
        for rec in result.records:
            assert abs(sum(rec.intra_samples) / len(rec.intra_samples) - rec.mean_speed) <= 1e-9
            assert abs(sum(rec.deviations) / len(rec.deviations)) <= 1e-9


class TestAlignErrors:
    def _hourly(self, means, start=_utc(2024, 1, 5)):
        from windband.ingest import HourlyRecord

        return [
            HourlyRecord(
                hour_start=start.replace(hour=i),
                mean_speed=m,
                intra_samples=(m, m),
                deviations=(0.0, 0.0),
            )
            for i, m in enumerate(means)
        ]

    def test_direct_formula(self):
        hourly = self._hourly([10.0])
        forecasts = [ForecastRecord(_utc(2024, 1, 5), 1.0, 9.5)]
        result = align_errors(hourly, forecasts, 1.0)
        assert result.errors[0].error == pytest.approx(0.5)

    def test_perfect_forecast(self):
        hourly = self._hourly([7.25])
        forecasts = [ForecastRecord(_utc(2024, 1, 5), 1.0, 7.25)]
        result = align_errors(hourly, forecasts, 1.0)
        assert result.errors[0].error == 0.0

    def test_join_semantics_and_skip_count(self):
        hourly = self._hourly([10.0, 11.0, 12.0])
        forecasts = [
            ForecastRecord(_utc(2024, 1, 5, 0), 1.0, 9.0),
            ForecastRecord(_utc(2024, 1, 5, 2), 1.0, 11.5),
            ForecastRecord(_utc(2024, 1, 5, 1), 2.0, 10.0),  # other lead, ignored
        ]
        result = align_errors(hourly, forecasts, 1.0)
        assert len(result.errors) == 2
        assert result.unmatched_hours == 1
        assert [e.error for e in result.errors] == [pytest.approx(1.0), pytest.approx(0.5)]

    def test_exact_subtraction_property(self):
        hourly = self._hourly([3.123456789, 18.99999999])
        forecasts = [
            ForecastRecord(_utc(2024, 1, 5, 0), 1.0, 2.5),
            ForecastRecord(_utc(2024, 1, 5, 1), 1.0, 19.0),
        ]
        result = align_errors(hourly, forecasts, 1.0)
        assert result.errors[0].error == 3.123456789 - 2.5
        assert result.errors[1].error == 18.99999999 - 19.0
        assert len(result.errors) <= min(len(hourly), len(forecasts))

    def test_empty_join_raises(self):
        hourly = self._hourly([10.0])
        forecasts = [ForecastRecord(_utc(2024, 2, 5), 1.0, 9.0)]
        with pytest.raises(EmptyJoinError):
            align_errors(hourly, forecasts, 1.0)
