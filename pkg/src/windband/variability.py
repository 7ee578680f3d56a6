"""Intra-hour variability law.

Hourly records are binned by their hourly-average speed, one Gaussian is
fit per bin to the pooled 5-minute samples, and the per-bin standard
deviation is regressed linearly on the per-bin mean. The resulting affine
law sigma(mu) is what every downstream density evaluation uses.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import ConfigError, DegenerateDataError, InsufficientDataError
from .ingest import HourlyRecord


@dataclass(frozen=True)
class BinConfig:
    """Uniform half-open bins [lo + k*width, lo + (k+1)*width) over [lo, hi)."""

    lo: float = 0.0
    hi: float = 25.0
    width: float = 1.0

    def __post_init__(self):
        if not self.lo < self.hi:
            raise ConfigError(f"need lo < hi, got [{self.lo}, {self.hi}]")
        if self.width <= 0:
            raise ConfigError(f"width must be positive, got {self.width}")
        ratio = (self.hi - self.lo) / self.width
        if abs(ratio - round(ratio)) > 1e-9:
            raise ConfigError(f"width {self.width} does not evenly divide [{self.lo}, {self.hi}]")

    @property
    def n_bins(self) -> int:
        return round((self.hi - self.lo) / self.width)

    def center(self, index: int) -> float:
        return self.lo + (index + 0.5) * self.width


@dataclass(frozen=True)
class BinFit:
    """Gaussian moments of one bin's pooled intra-hour samples."""

    bin_center: float
    mu_star: float
    sigma_star: float
    n_hours: int
    n_samples: int

    def __post_init__(self):
        if self.sigma_star < 0:
            raise ValueError("sigma_star must be >= 0")
        if self.n_samples < self.n_hours:
            raise ValueError("n_samples must be >= n_hours")


@dataclass(frozen=True)
class SigmaEval:
    value: float
    clamped: bool
    floored: bool


@dataclass(frozen=True)
class VariabilityModel:
    """Affine intra-hour std law: sigma(mu) = intercept + slope * mu.

    Evaluation clamps mu to ``domain`` and floors the result at
    ``sigma_floor`` so densities built on top are always proper.
    """

    intercept: float
    slope: float
    domain: tuple[float, float] = (0.0, 25.0)
    sigma_floor: float = 1e-3

    def __post_init__(self):
        if self.sigma_floor <= 0:
            raise ConfigError(f"sigma_floor must be positive, got {self.sigma_floor}")
        if not self.domain[0] < self.domain[1]:
            raise ConfigError(f"bad domain {self.domain}")

    def sigma(self, mu):
        """Floored/clamped sigma at ``mu`` (scalar or ndarray)."""
        clipped = np.clip(mu, self.domain[0], self.domain[1])
        value = np.maximum(self.intercept + self.slope * clipped, self.sigma_floor)
        if np.ndim(mu) == 0:
            return float(value)
        return value

    def sigma_detail(self, mu: float) -> SigmaEval:
        lo, hi = self.domain
        clipped = min(max(mu, lo), hi)
        raw = self.intercept + self.slope * clipped
        return SigmaEval(
            value=max(raw, self.sigma_floor),
            clamped=clipped != mu,
            floored=raw < self.sigma_floor,
        )


@dataclass(frozen=True)
class BinningResult:
    bins: tuple[tuple[int, tuple[HourlyRecord, ...]], ...]
    out_of_range: int


@dataclass(frozen=True)
class VariabilityResult:
    model: VariabilityModel
    bin_fits: tuple[BinFit, ...]
    used_fits: tuple[BinFit, ...]
    out_of_range: int
    bins_skipped: int


def bin_by_mean(records: Iterable[HourlyRecord], cfg: BinConfig) -> BinningResult:
    """Assign hours to half-open speed bins by their mean speed.

    Hours with mean outside [lo, hi) are discarded and counted.
    """
    members: dict[int, list[HourlyRecord]] = {}
    out_of_range = 0
    for record in records:
        if not (cfg.lo <= record.mean_speed < cfg.hi):
            out_of_range += 1
            continue
        index = int((record.mean_speed - cfg.lo) // cfg.width)
        members.setdefault(index, []).append(record)
    bins = tuple((k, tuple(members[k])) for k in sorted(members))
    return BinningResult(bins, out_of_range)


def fit_bin_gaussian(hours: Sequence[HourlyRecord], bin_center: float) -> BinFit:
    """Gaussian maximum-likelihood fit of one bin: mean and population std
    of the pooled intra-hour samples of its member hours."""
    pooled = np.concatenate([np.asarray(h.intra_samples) for h in hours]) if hours else np.empty(0)
    if pooled.size < 2:
        raise InsufficientDataError(
            f"bin at {bin_center} has {pooled.size} pooled samples, need >= 2"
        )
    return BinFit(
        bin_center=bin_center,
        mu_star=float(pooled.mean()),
        sigma_star=float(pooled.std(ddof=0)),
        n_hours=len(hours),
        n_samples=int(pooled.size),
    )


def fit_sigma_law(
    fits: Sequence[BinFit],
    min_hours_per_bin: int = 5,
    domain: tuple[float, float] = (0.0, 25.0),
    sigma_floor: float = 1e-3,
) -> VariabilityModel:
    """Weighted least squares of sigma on mu across bins.

    Bins with fewer than ``min_hours_per_bin`` hours are excluded; weights
    are the pooled sample counts.
    """
    usable = [f for f in fits if f.n_hours >= min_hours_per_bin]
    if len(usable) < 2:
        raise InsufficientDataError(
            f"{len(usable)} bins with >= {min_hours_per_bin} hours, need >= 2"
        )
    x = np.array([f.mu_star for f in usable])
    y = np.array([f.sigma_star for f in usable])
    w = np.array([f.n_samples for f in usable], dtype=float)

    x_bar = np.average(x, weights=w)
    y_bar = np.average(y, weights=w)
    sxx = np.sum(w * (x - x_bar) ** 2)
    if sxx <= 1e-12 * np.sum(w) * max(1.0, x_bar * x_bar):
        raise DegenerateDataError("all bin means identical; cannot regress")
    slope = float(np.sum(w * (x - x_bar) * (y - y_bar)) / sxx)
    intercept = float(y_bar - slope * x_bar)
    return VariabilityModel(intercept, slope, domain=domain, sigma_floor=sigma_floor)


def build_variability_model(
    records: Iterable[HourlyRecord],
    cfg: BinConfig | None = None,
    min_hours_per_bin: int = 5,
    sigma_floor: float = 1e-3,
) -> VariabilityResult:
    """Full chain: bin hours, fit per-bin Gaussians, regress the law."""
    cfg = cfg or BinConfig()
    binning = bin_by_mean(records, cfg)
    fits = []
    skipped = 0
    for index, hours in binning.bins:
        try:
            fits.append(fit_bin_gaussian(hours, cfg.center(index)))
        except InsufficientDataError:
            skipped += 1
    model = fit_sigma_law(
        fits,
        min_hours_per_bin=min_hours_per_bin,
        domain=(cfg.lo, cfg.hi),
        sigma_floor=sigma_floor,
    )
    used = tuple(f for f in fits if f.n_hours >= min_hours_per_bin)
    return VariabilityResult(model, tuple(fits), used, binning.out_of_range, skipped)
