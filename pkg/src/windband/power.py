"""Turbine power curve and conversion of speed sets to power sets.

The curve has four regions: zero below cut-in, a piecewise-linear ascent
up to rated speed, flat at rated power until cut-out, zero beyond. Slopes
use the right-hand convention at breakpoints; the extremal searches also
evaluate left-hand limits at interior breakpoints so that convention
cannot move the bounds.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .uncertainty import SpeedUncertaintySet
from .variability import VariabilityModel


@dataclass(frozen=True)
class PowerCurve:
    """Piecewise turbine curve in per-unit power.

    ``ascent`` is the breakpoint list spanning [cut_in, rated_speed]; it
    must start at (cut_in, 0) and end at (rated_speed, rated_power) with
    strictly increasing speeds and powers.
    """

    cut_in: float = 3.5
    rated_speed: float = 14.0
    cut_out: float = 25.0
    rated_power: float = 1.0
    ascent: tuple[tuple[float, float], ...] = ((3.5, 0.0), (14.0, 1.0))

    def __post_init__(self):
        if not 0 < self.cut_in < self.rated_speed < self.cut_out:
            raise ConfigError(
                f"need 0 < cut_in < rated_speed < cut_out, got "
                f"({self.cut_in}, {self.rated_speed}, {self.cut_out})"
            )
        if self.rated_power <= 0:
            raise ConfigError(f"rated_power must be positive, got {self.rated_power}")
        if len(self.ascent) < 2:
            raise ConfigError("ascent needs at least two breakpoints")
        speeds = [s for s, _ in self.ascent]
        powers = [p for _, p in self.ascent]
        if abs(speeds[0] - self.cut_in) > 1e-9 or abs(powers[0]) > 1e-9:
            raise ConfigError(f"ascent must start at (cut_in, 0), got {self.ascent[0]}")
        if abs(speeds[-1] - self.rated_speed) > 1e-9 or abs(powers[-1] - self.rated_power) > 1e-9:
            raise ConfigError(
                f"ascent must end at (rated_speed, rated_power), got {self.ascent[-1]}"
            )
        if any(b <= a for a, b in zip(speeds, speeds[1:])):
            raise ConfigError("ascent speeds must be strictly increasing")
        if any(b <= a for a, b in zip(powers, powers[1:])):
            raise ConfigError("ascent powers must be strictly increasing")

    @property
    def breakpoints(self) -> tuple[float, ...]:
        """All speeds where the curve or its slope changes."""
        return tuple(s for s, _ in self.ascent) + (self.cut_out,)

    def to_dict(self) -> dict:
        return {
            "cut_in": self.cut_in,
            "rated_speed": self.rated_speed,
            "cut_out": self.cut_out,
            "rated_power": self.rated_power,
            "ascent": [[s, p] for s, p in self.ascent],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "PowerCurve":
        known = {"cut_in", "rated_speed", "cut_out", "rated_power", "ascent"}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown power-curve keys: {sorted(unknown)}")
        try:
            ascent = tuple((float(s), float(p)) for s, p in data.get("ascent", ()))
        except (TypeError, ValueError):
            raise ConfigError("ascent must be a list of [speed, power] pairs") from None
        kwargs = {k: float(data[k]) for k in known - {"ascent"} if k in data}
        if ascent:
            kwargs["ascent"] = ascent
        return cls(**kwargs)


@dataclass(frozen=True)
class PowerInterval:
    p_lo: float
    p_hi: float
    straddles_cut_out: bool

    def __post_init__(self):
        if not 0 <= self.p_lo <= self.p_hi:
            raise ValueError("need 0 <= p_lo <= p_hi")


@dataclass(frozen=True)
class PowerUncertaintySet:
    """Power-domain set: output interval plus std bounds, all per-unit."""

    p_lo: float
    p_hi: float
    sigma_p_lo: float
    sigma_p_hi: float
    straddles_cut_out: bool = False

    def __post_init__(self):
        if not 0 <= self.p_lo <= self.p_hi:
            raise ValueError("need 0 <= p_lo <= p_hi")
        if not 0 <= self.sigma_p_lo <= self.sigma_p_hi:
            raise ValueError("need 0 <= sigma_p_lo <= sigma_p_hi")


def power(curve: PowerCurve, mu):
    """Curve output at ``mu`` (scalar or ndarray, m/s)."""
    mu_arr = np.asarray(mu, dtype=float)
    speeds = np.array([s for s, _ in curve.ascent])
    powers = np.array([p for _, p in curve.ascent])
    out = np.where(
        mu_arr < curve.cut_in,
        0.0,
        np.where(
            mu_arr < curve.rated_speed,
            np.interp(mu_arr, speeds, powers),
            np.where(mu_arr < curve.cut_out, curve.rated_power, 0.0),
        ),
    )
    if np.ndim(mu) == 0:
        return float(out)
    return out


def slope(curve: PowerCurve, mu):
    """Right-hand derivative of the curve at ``mu`` (scalar or ndarray).

    Zero everywhere except inside [cut_in, rated_speed), where it is the
    slope of the ascent segment starting at or before ``mu``.
    """
    mu_arr = np.atleast_1d(np.asarray(mu, dtype=float))
    speeds = np.array([s for s, _ in curve.ascent])
    powers = np.array([p for _, p in curve.ascent])
    seg_slopes = np.diff(powers) / np.diff(speeds)
    seg = np.clip(np.searchsorted(speeds, mu_arr, side="right") - 1, 0, len(seg_slopes) - 1)
    in_ascent = (mu_arr >= curve.cut_in) & (mu_arr < curve.rated_speed)
    out = np.where(in_ascent, seg_slopes[seg], 0.0)
    if np.ndim(mu) == 0:
        return float(out[0])
    return out


def slope_left(curve: PowerCurve, mu: float) -> float:
    """Left-hand derivative at ``mu``; used for extremal candidates."""
    if mu <= curve.cut_in or mu > curve.rated_speed:
        return 0.0
    speeds = np.array([s for s, _ in curve.ascent])
    powers = np.array([p for _, p in curve.ascent])
    seg_slopes = np.diff(powers) / np.diff(speeds)
    seg = int(np.clip(np.searchsorted(speeds, mu, side="left") - 1, 0, len(seg_slopes) - 1))
    return float(seg_slopes[seg])


def power_interval(curve: PowerCurve, sset: SpeedUncertaintySet) -> PowerInterval:
    """Min/max curve output over the speed-mean interval.

    Candidates are the interval endpoints plus every breakpoint inside, so
    the result is exact for the piecewise curve. Equals the endpoint
    mapping wherever the curve is nondecreasing on the interval. Intervals
    reaching past cut-out are flagged, not rejected.
    """
    lo, hi = sset.mean_lo, sset.mean_hi
    candidates = [lo, hi] + [b for b in curve.breakpoints if lo < b < hi]
    values = [power(curve, c) for c in candidates]
    return PowerInterval(
        p_lo=min(values),
        p_hi=max(values),
        straddles_cut_out=hi > curve.cut_out,
    )


def sigma_power_point(curve: PowerCurve, vm: VariabilityModel, mu):
    """Power std at one speed: curve slope times the variability law."""
    return slope(curve, mu) * vm.sigma(mu)


def sigma_power_bounds(
    curve: PowerCurve,
    vm: VariabilityModel,
    sset: SpeedUncertaintySet,
    grid_step: float = 1e-3,
) -> tuple[float, float]:
    """Min and max power std over the speed-mean interval.

    Scans a uniform grid augmented with the interval endpoints and every
    breakpoint inside, and additionally evaluates left-hand slope limits
    at breakpoints so the bounds are the true extrema of the piecewise
    product (the mean range and std range are treated as independent).
    """
    if grid_step <= 0:
        raise ConfigError(f"grid_step must be positive, got {grid_step}")
    lo, hi = sset.mean_lo, sset.mean_hi
    structural = sorted(set(curve.breakpoints) | set(vm.domain))
    points = np.concatenate(
        [
            np.arange(lo, hi, grid_step),
            [lo, hi],
            [b for b in structural if lo < b < hi],
        ]
    )
    values = sigma_power_point(curve, vm, points)
    limits = [
        slope_left(curve, b) * vm.sigma(b)
        for b in structural
        if lo < b <= hi
    ]
    all_values = np.concatenate([values, limits]) if limits else values
    return float(all_values.min()), float(all_values.max())


def power_uncertainty_set(
    curve: PowerCurve,
    vm: VariabilityModel,
    sset: SpeedUncertaintySet,
    grid_step: float = 1e-3,
) -> PowerUncertaintySet:
    """Full speed-to-power conversion of one uncertainty set."""
    interval = power_interval(curve, sset)
    sig_lo, sig_hi = sigma_power_bounds(curve, vm, sset, grid_step)
    return PowerUncertaintySet(
        p_lo=interval.p_lo,
        p_hi=interval.p_hi,
        sigma_p_lo=sig_lo,
        sigma_p_hi=sig_hi,
        straddles_cut_out=interval.straddles_cut_out,
    )
