"""Pipeline configuration, stage runners and report writing.

Each command computes its full report first and only then writes files,
so failures never leave partial outputs. Reports embed the resolved
configuration; feeding that echo back as a config file reproduces the run.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from datetime import datetime, timezone
from pathlib import Path

import numpy as np

from . import __version__, kernels
from .errors import ConfigError, FitError, InputError, StageError, WindbandError
from .ingest import (
    WindowFilter,
    aggregate_hourly,
    align_errors,
    filter_window,
    format_forecast_series,
    format_speed_series,
    parse_forecast_series,
    parse_speed_series,
)
from .power import PowerCurve, power_uncertainty_set
from .synth import SyntheticSpec, generate
from .uncertainty import (
    ErrorHistogram,
    MixtureFit,
    QuadratureConfig,
    SearchConfig,
    band_density,
    build_error_histogram,
    fit_mixture_bounds,
    fit_single_gaussian,
    speed_uncertainty_set,
)
from .variability import BinConfig, VariabilityModel, build_variability_model


# ---------------------------------------------------------------------------
# Configuration


@dataclass(frozen=True)
class HistogramConfig:
    bin_width: float | None = None
    min_samples: int = 30


@dataclass(frozen=True)
class SynthConfig:
    hours: int = 500
    intercept: float = 0.231
    slope: float = 0.197
    mu_range: tuple[float, float] = (3.0, 20.0)
    bounds: dict[float, tuple[float, float]] | None = None
    samples_per_hour: int = 12
    start: str = "2024-01-01T00:00:00Z"


@dataclass(frozen=True)
class PipelineConfig:
    measurements: str = "measurements.csv"
    forecasts: str = "forecasts.csv"
    output_dir: str = "out"
    window: WindowFilter = WindowFilter(frozenset(range(1, 13)), (0, 24))
    bins: BinConfig = BinConfig()
    min_samples_per_hour: int = 10
    min_hours_per_bin: int = 5
    sigma_floor: float = 1e-3
    leads: tuple[float, ...] = (1.0,)
    forecast_mean: float = 10.0
    histogram: HistogramConfig = HistogramConfig()
    quadrature: QuadratureConfig = QuadratureConfig()
    search: SearchConfig = SearchConfig()
    power_curve: str | None = None
    variability_model: str | None = None
    seed: int = 0
    synth: SynthConfig | None = None

    def __post_init__(self):
        if not self.leads:
            raise ConfigError("leads must be nonempty")
        if any(lead <= 0 for lead in self.leads):
            raise ConfigError(f"leads must be positive, got {self.leads}")


def _check_keys(section: dict, allowed: set[str], where: str):
    unknown = sorted(set(section) - allowed)
    if unknown:
        raise ConfigError(f"unknown {where} keys: {unknown}")


def _build(section: dict, cls, where: str, **converted):
    import dataclasses

    fields = {f.name for f in dataclasses.fields(cls)}
    _check_keys(section, fields, where)
    kwargs = {k: v for k, v in section.items() if k not in converted}
    kwargs.update(converted)
    try:
        return cls(**kwargs)
    except TypeError as exc:
        raise ConfigError(f"bad {where} section: {exc}") from None


def config_from_dict(data: dict) -> PipelineConfig:
    if not isinstance(data, dict):
        raise ConfigError("config must be a JSON object")
    top = {
        "measurements", "forecasts", "output_dir", "window", "bins",
        "min_samples_per_hour", "min_hours_per_bin", "sigma_floor", "leads",
        "forecast_mean", "histogram", "quadrature", "search", "power_curve",
        "variability_model", "seed", "synth",
    }
    _check_keys(data, top, "config")

    kwargs = {k: v for k, v in data.items()
              if k not in {"window", "bins", "histogram", "quadrature", "search", "synth", "leads"}}
    try:
        if "leads" in data:
            kwargs["leads"] = tuple(float(lead) for lead in data["leads"])
        if "window" in data:
            w = dict(data["window"])
            _check_keys(w, {"months", "hours"}, "window")
            kwargs["window"] = WindowFilter(
                months=frozenset(int(m) for m in w.get("months", range(1, 13))),
                hour_range=tuple(int(h) for h in w.get("hours", (0, 24))),
            )
        if "bins" in data:
            kwargs["bins"] = _build(dict(data["bins"]), BinConfig, "bins")
        if "histogram" in data:
            kwargs["histogram"] = _build(dict(data["histogram"]), HistogramConfig, "histogram")
        if "quadrature" in data:
            kwargs["quadrature"] = _build(dict(data["quadrature"]), QuadratureConfig, "quadrature")
        if "search" in data:
            kwargs["search"] = _build(dict(data["search"]), SearchConfig, "search")
        if "synth" in data and data["synth"] is not None:
            s = dict(data["synth"])
            converted = {}
            if "mu_range" in s:
                converted["mu_range"] = tuple(float(v) for v in s["mu_range"])
            if "bounds" in s:
                converted["bounds"] = {
                    float(k): (float(v[0]), float(v[1])) for k, v in s["bounds"].items()
                }
            kwargs["synth"] = _build(s, SynthConfig, "synth", **converted)
        return PipelineConfig(**kwargs)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad config value: {exc}") from None


def load_config(path: str | Path) -> PipelineConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read config {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"config {path} is not valid JSON: {exc}") from None
    return config_from_dict(data)


def config_to_dict(cfg: PipelineConfig) -> dict:
    """Resolved configuration echo; valid input for config_from_dict."""
    out = {
        "measurements": cfg.measurements,
        "forecasts": cfg.forecasts,
        "output_dir": cfg.output_dir,
        "window": {
            "months": sorted(cfg.window.months),
            "hours": list(cfg.window.hour_range),
        },
        "bins": {"lo": cfg.bins.lo, "hi": cfg.bins.hi, "width": cfg.bins.width},
        "min_samples_per_hour": cfg.min_samples_per_hour,
        "min_hours_per_bin": cfg.min_hours_per_bin,
        "sigma_floor": cfg.sigma_floor,
        "leads": list(cfg.leads),
        "forecast_mean": cfg.forecast_mean,
        "histogram": {
            "bin_width": cfg.histogram.bin_width,
            "min_samples": cfg.histogram.min_samples,
        },
        "quadrature": {
            "panel_order": cfg.quadrature.panel_order,
            "min_panels": cfg.quadrature.min_panels,
            "max_panels": cfg.quadrature.max_panels,
            "panel_width_sigmas": cfg.quadrature.panel_width_sigmas,
            "degenerate_width": cfg.quadrature.degenerate_width,
        },
        "search": {
            "grid_size": cfg.search.grid_size,
            "bracket_sigmas": cfg.search.bracket_sigmas,
            "simplex_max_iter": cfg.search.simplex_max_iter,
            "simplex_xatol": cfg.search.simplex_xatol,
            "simplex_fatol": cfg.search.simplex_fatol,
        },
        "power_curve": cfg.power_curve,
        "variability_model": cfg.variability_model,
        "seed": cfg.seed,
    }
    if cfg.synth is not None:
        out["synth"] = {
            "hours": cfg.synth.hours,
            "intercept": cfg.synth.intercept,
            "slope": cfg.synth.slope,
            "mu_range": list(cfg.synth.mu_range),
            "bounds": {f"{k:g}": list(v) for k, v in (cfg.synth.bounds or {}).items()},
            "samples_per_hour": cfg.synth.samples_per_hour,
            "start": cfg.synth.start,
        }
    else:
        out["synth"] = None
    return out


# ---------------------------------------------------------------------------
# Serialization helpers


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_jsonable(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _report_head(cfg: PipelineConfig) -> dict:
    return {
        "version": __version__,
        "kernel_backend": kernels.backend_name(),
        "generated_at": datetime.now(timezone.utc).isoformat(),
        "config": config_to_dict(cfg),
    }


def write_outputs(out_dir: str | Path, outputs: dict[str, object]) -> list[Path]:
    """Write every output at once; dict values become JSON, str values text."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    written = []
    for name, content in outputs.items():
        path = out_dir / name
        if isinstance(content, str):
            path.write_text(content, encoding="utf-8")
        else:
            path.write_text(
                json.dumps(_jsonable(content), indent=2) + "\n", encoding="utf-8"
            )
        written.append(path)
    return written


def _csv(header: str, rows) -> str:
    lines = [header]
    lines += [",".join(repr(v) if isinstance(v, float) else str(v) for v in row) for row in rows]
    return "\n".join(lines) + "\n"


def _lead_tag(lead: float) -> str:
    return f"{lead:g}"


# ---------------------------------------------------------------------------
# Shared loading steps


def _load_hourly(cfg: PipelineConfig):
    try:
        with open(cfg.measurements, encoding="utf-8") as fh:
            series = parse_speed_series(fh)
    except OSError as exc:
        raise InputError(f"cannot read measurements {cfg.measurements}: {exc}") from None
    filtered = filter_window(series, cfg.window)
    agg = aggregate_hourly(filtered, cfg.min_samples_per_hour)
    counters = {
        "samples_total": len(series),
        "samples_in_window": len(filtered),
        "hours_aggregated": len(agg.records),
        "hours_dropped_incomplete": agg.dropped_hours,
    }
    return agg.records, counters


def _load_forecasts(cfg: PipelineConfig):
    try:
        with open(cfg.forecasts, encoding="utf-8") as fh:
            return parse_forecast_series(fh)
    except OSError as exc:
        raise InputError(f"cannot read forecasts {cfg.forecasts}: {exc}") from None


def _load_power_curve(cfg: PipelineConfig) -> PowerCurve:
    if cfg.power_curve is None:
        return PowerCurve()
    try:
        with open(cfg.power_curve, encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read power curve {cfg.power_curve}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise InputError(f"power curve {cfg.power_curve} is not valid JSON: {exc}") from None
    return PowerCurve.from_dict(data)


def _variability_model_from_report(report: dict) -> VariabilityModel:
    model = report["model"]
    return VariabilityModel(
        intercept=model["intercept"],
        slope=model["slope"],
        domain=tuple(model["domain"]),
        sigma_floor=model["sigma_floor"],
    )


# ---------------------------------------------------------------------------
# Commands


def cmd_synth(cfg: PipelineConfig) -> dict:
    """Generate measurement and forecast files at the configured paths."""
    if cfg.synth is None:
        raise ConfigError("config has no synth section")
    bounds = cfg.synth.bounds or {lead: (-1.0, 2.0) for lead in cfg.leads}
    start = cfg.synth.start
    if start.endswith("Z"):
        start = start[:-1] + "+00:00"
    try:
        start_dt = datetime.fromisoformat(start)
    except ValueError:
        raise ConfigError(f"bad synth start {cfg.synth.start!r}") from None
    if start_dt.tzinfo is None:
        start_dt = start_dt.replace(tzinfo=timezone.utc)
    spec = SyntheticSpec(
        intercept=cfg.synth.intercept,
        slope=cfg.synth.slope,
        lead_bounds=bounds,
        hours=cfg.synth.hours,
        seed=cfg.seed,
        mu_range=cfg.synth.mu_range,
        samples_per_hour=cfg.synth.samples_per_hour,
        start=start_dt,
        sigma_floor=cfg.sigma_floor,
        domain=(cfg.bins.lo, cfg.bins.hi),
    )
    dataset = generate(spec)
    Path(cfg.measurements).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.forecasts).parent.mkdir(parents=True, exist_ok=True)
    Path(cfg.measurements).write_text(format_speed_series(dataset.series), encoding="utf-8")
    Path(cfg.forecasts).write_text(format_forecast_series(dataset.forecasts), encoding="utf-8")
    report = _report_head(cfg)
    report.update(
        {
            "hours": spec.hours,
            "samples_written": len(dataset.series),
            "forecasts_written": len(dataset.forecasts),
            "clipped_samples": dataset.clipped_samples,
            "clipped_forecasts": dataset.clipped_forecasts,
        }
    )
    return report


def cmd_fit_variability(cfg: PipelineConfig, _hourly=None) -> dict:
    """Fit the variability law and write the bin table + model report."""
    hourly, counters = _hourly if _hourly is not None else _load_hourly(cfg)
    result = build_variability_model(
        hourly, cfg.bins, min_hours_per_bin=cfg.min_hours_per_bin, sigma_floor=cfg.sigma_floor
    )
    used = set(id(f) for f in result.used_fits)
    report = _report_head(cfg)
    report.update(
        {
            "model": {
                "intercept": result.model.intercept,
                "slope": result.model.slope,
                "domain": list(result.model.domain),
                "sigma_floor": result.model.sigma_floor,
            },
            "bins": [
                {
                    "center": f.bin_center,
                    "mu_star": f.mu_star,
                    "sigma_star": f.sigma_star,
                    "n_hours": f.n_hours,
                    "n_samples": f.n_samples,
                    "used": id(f) in used,
                }
                for f in result.bin_fits
            ],
            "counters": {
                **counters,
                "hours_out_of_range": result.out_of_range,
                "bins_fit": len(result.bin_fits),
                "bins_used": len(result.used_fits),
                "bins_skipped_small": result.bins_skipped,
            },
        }
    )
    outputs = {
        "variability.json": report,
        "variability_bins.csv": _csv(
            "mu_star,sigma_star,n_hours,n_samples",
            [(f.mu_star, f.sigma_star, f.n_hours, f.n_samples) for f in result.bin_fits],
        ),
    }
    write_outputs(cfg.output_dir, outputs)
    return report


def _density_curves(hist: ErrorHistogram, vm: VariabilityModel, mixture: MixtureFit,
                    single, quad: QuadratureConfig, n_points: int = 401) -> dict:
    sigma = max(vm.sigma(float(hist.edges[0])), vm.sigma(float(hist.edges[-1])))
    e = np.linspace(hist.edges[0] - 2 * sigma, hist.edges[-1] + 2 * sigma, n_points)
    emp = np.zeros_like(e)
    inside = (e >= hist.edges[0]) & (e < hist.edges[-1])
    idx = np.searchsorted(hist.edges, e[inside], side="right") - 1
    emp[inside] = hist.density[idx]
    band = band_density(e, mixture.mu_minus, mixture.mu_plus, vm, quad)
    gauss = kernels.mixture_pdf(
        np.ascontiguousarray(e), np.array([single.mean]), np.array([single.std]), np.array([1.0])
    )
    return {"e": e, "empirical": emp, "band": band, "single_gaussian": gauss}


def _fit_one_lead(cfg: PipelineConfig, hourly, forecasts, vm: VariabilityModel, lead: float):
    alignment = align_errors(hourly, forecasts, lead)
    values = np.array([e.error for e in alignment.errors])
    hist = build_error_histogram(
        alignment.errors,
        lead_hours=lead,
        bin_width=cfg.histogram.bin_width,
        min_samples=cfg.histogram.min_samples,
    )
    mixture = fit_mixture_bounds(hist, vm, cfg.search, cfg.quadrature)
    single = fit_single_gaussian(hist, vm, cfg.search)
    curves = _density_curves(hist, vm, mixture, single, cfg.quadrature)
    return {
        "lead_hours": lead,
        "alignment": {
            "errors_used": len(alignment.errors),
            "unmatched_hours": alignment.unmatched_hours,
            "unmatched_forecasts": alignment.unmatched_forecasts,
        },
        "histogram": {
            "edges": hist.edges,
            "density": hist.density,
            "n_samples": hist.n_samples,
        },
        "mixture": {
            "mu_minus": mixture.mu_minus,
            "mu_plus": mixture.mu_plus,
            "objective": mixture.objective,
            "quadrature_points": mixture.quadrature_points,
        },
        "single_gaussian": {
            "mean": single.mean,
            "std": single.std,
            "objective": single.objective,
        },
        "sample_moments": {
            "mean": float(values.mean()),
            "std": float(values.std(ddof=0)),
        },
        "curves": curves,
    }


def cmd_fit_uncertainty(cfg: PipelineConfig, _hourly=None, _variability=None,
                        _forecasts=None) -> dict:
    """Per-lead error histograms and band fits; failed leads are skipped."""
    hourly, counters = _hourly if _hourly is not None else _load_hourly(cfg)
    if _variability is not None:
        variability_report = _variability
    elif cfg.variability_model is not None:
        try:
            with open(cfg.variability_model, encoding="utf-8") as fh:
                variability_report = json.load(fh)
        except OSError as exc:
            raise InputError(
                f"cannot read variability model {cfg.variability_model}: {exc}"
            ) from None
    else:
        variability_report = cmd_fit_variability(cfg, _hourly=(hourly, counters))
    vm = _variability_model_from_report(variability_report)
    forecasts = _forecasts if _forecasts is not None else _load_forecasts(cfg)

    leads = {}
    skipped = {}
    for lead in cfg.leads:
        try:
            leads[_lead_tag(lead)] = _fit_one_lead(cfg, hourly, forecasts, vm, lead)
        except (InputError, FitError) as exc:
            skipped[_lead_tag(lead)] = f"{type(exc).__name__}: {exc}"
    if not leads:
        raise FitError(f"every lead failed: {skipped}")

    report = _report_head(cfg)
    report.update(
        {
            "model": variability_report["model"],
            "counters": counters,
            "leads": leads,
            "skipped_leads": skipped,
        }
    )
    outputs = {}
    for tag, entry in leads.items():
        lead_report = _report_head(cfg)
        lead_report.update({"model": variability_report["model"], **entry})
        outputs[f"uncertainty_{tag}.json"] = lead_report
        curves = entry["curves"]
        outputs[f"error_fit_{tag}.csv"] = _csv(
            "e,empirical,band,single_gaussian",
            zip(
                curves["e"].tolist(),
                curves["empirical"].tolist(),
                curves["band"].tolist(),
                curves["single_gaussian"].tolist(),
            ),
        )
    outputs["mixture_bounds.csv"] = _csv(
        "lead_hours,mu_minus,mu_plus,objective",
        [
            (
                leads[tag]["lead_hours"],
                leads[tag]["mixture"]["mu_minus"],
                leads[tag]["mixture"]["mu_plus"],
                leads[tag]["mixture"]["objective"],
            )
            for tag in leads
        ],
    )
    write_outputs(cfg.output_dir, outputs)
    return report


def cmd_convert(cfg: PipelineConfig, _uncertainty=None) -> dict:
    """Convert fitted bounds to speed and power uncertainty sets."""
    curve = _load_power_curve(cfg)
    if _uncertainty is not None:
        uncertainty = _uncertainty
    else:
        uncertainty = {"leads": {}, "model": None}
        out_dir = Path(cfg.output_dir)
        for lead in cfg.leads:
            path = out_dir / f"uncertainty_{_lead_tag(lead)}.json"
            try:
                with open(path, encoding="utf-8") as fh:
                    entry = json.load(fh)
            except OSError as exc:
                raise InputError(f"missing uncertainty fit {path}: {exc}") from None
            uncertainty["leads"][_lead_tag(lead)] = entry
            uncertainty["model"] = entry["model"]
        uncertainty["skipped_leads"] = {}
    vm = _variability_model_from_report(uncertainty)

    rows = []
    for tag, entry in uncertainty["leads"].items():
        m = entry["mixture"]
        fit = MixtureFit(
            mu_minus=m["mu_minus"],
            mu_plus=m["mu_plus"],
            objective=m["objective"],
            lead_hours=entry["lead_hours"],
            quadrature_points=m["quadrature_points"],
        )
        sset = speed_uncertainty_set(cfg.forecast_mean, fit, vm)
        pset = power_uncertainty_set(curve, vm, sset)
        rows.append(
            {
                "lead_hours": entry["lead_hours"],
                "speed": {
                    "forecast_mean": sset.forecast_mean,
                    "mean_lo": sset.mean_lo,
                    "mean_hi": sset.mean_hi,
                    "sigma_lo": sset.sigma_lo,
                    "sigma_hi": sset.sigma_hi,
                },
                "power": {
                    "p_lo": pset.p_lo,
                    "p_hi": pset.p_hi,
                    "sigma_p_lo": pset.sigma_p_lo,
                    "sigma_p_hi": pset.sigma_p_hi,
                    "straddles_cut_out": pset.straddles_cut_out,
                },
            }
        )
    rows.sort(key=lambda r: r["lead_hours"])

    report = _report_head(cfg)
    report.update(
        {
            "forecast_mean": cfg.forecast_mean,
            "curve": curve.to_dict(),
            "leads": rows,
            "skipped_leads": uncertainty.get("skipped_leads", {}),
        }
    )
    outputs = {
        "power_sets.json": report,
        "speed_sets.csv": _csv(
            "lead_hours,mean_lo,mean_hi,sigma_lo,sigma_hi",
            [
                (
                    r["lead_hours"],
                    r["speed"]["mean_lo"],
                    r["speed"]["mean_hi"],
                    r["speed"]["sigma_lo"],
                    r["speed"]["sigma_hi"],
                )
                for r in rows
            ],
        ),
        "power_sets.csv": _csv(
            "lead_hours,p_lo,p_hi,sigma_p_lo,sigma_p_hi",
            [
                (
                    r["lead_hours"],
                    r["power"]["p_lo"],
                    r["power"]["p_hi"],
                    r["power"]["sigma_p_lo"],
                    r["power"]["sigma_p_hi"],
                )
                for r in rows
            ],
        ),
    }
    write_outputs(cfg.output_dir, outputs)
    return report


def cmd_pipeline(cfg: PipelineConfig) -> dict:
    """Run every stage on the configured inputs and write one consolidated
    report next to the per-stage outputs."""

    def stage(name, fn, *args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except WindbandError as exc:
            raise StageError(name, exc) from exc

    hourly = stage("ingest", _load_hourly, cfg)
    forecasts = stage("ingest", _load_forecasts, cfg)
    variability = stage("variability", cmd_fit_variability, cfg, _hourly=hourly)
    uncertainty = stage(
        "uncertainty", cmd_fit_uncertainty, cfg,
        _hourly=hourly, _variability=variability, _forecasts=forecasts,
    )
    convert = stage("power", cmd_convert, cfg, _uncertainty=uncertainty)

    report = _report_head(cfg)
    report.update(
        {
            "variability": {k: variability[k] for k in ("model", "bins", "counters")},
            "uncertainty": {
                "leads": uncertainty["leads"],
                "skipped_leads": uncertainty["skipped_leads"],
            },
            "power": {k: convert[k] for k in ("forecast_mean", "curve", "leads")},
        }
    )
    write_outputs(cfg.output_dir, {"pipeline.json": report})
    return report
