"""Forecast-error density modeling and uncertainty-set fitting.

The forecast-error density is modeled as a Gaussian whose mean is smeared
uniformly over a band [mu_minus, mu_plus], with the component std taken
from the variability law:

    f(e) = (1 / (mu_plus - mu_minus)) * integral over the band of
           N[e; mu, sigma(mu)] dmu

The band bounds are fit to the empirical error histogram by minimizing the
discretized L2 distance between the two densities, via a deterministic
coarse grid followed by simplex refinement. A single-Gaussian fit of the
same objective is provided for comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np
from scipy import optimize

from . import kernels
from .errors import ConfigError, DegenerateDataError, InsufficientDataError
from .ingest import ErrorSample
from .variability import VariabilityModel

# The L2 integral is truncated at the histogram support extended by this
# many max-sigma on each side (empirical density is zero out there, model
# density is still penalized).
OBJECTIVE_MARGIN_SIGMAS = 4.0


@dataclass(frozen=True)
class QuadratureConfig:
    """Composite Gauss-Legendre rule for the band integral.

    The band is split into equal panels of ``panel_order`` nodes each; the
    panel count grows with band width so that panels stay no wider than
    ``panel_width_sigmas`` times the smallest component std (capped at
    ``max_panels``). The default floor of 4 panels puts 64 nodes on a
    narrow band. Bands narrower than ``degenerate_width`` collapse to the
    midpoint Gaussian.
    """

    panel_order: int = 16
    min_panels: int = 4
    max_panels: int = 64
    panel_width_sigmas: float = 2.5
    degenerate_width: float = 1e-6

    def __post_init__(self):
        if self.panel_order < 2:
            raise ConfigError("panel_order must be >= 2")
        if not 1 <= self.min_panels <= self.max_panels:
            raise ConfigError("need 1 <= min_panels <= max_panels")
        if self.panel_width_sigmas <= 0 or self.degenerate_width <= 0:
            raise ConfigError("panel_width_sigmas and degenerate_width must be positive")


@dataclass(frozen=True)
class SearchConfig:
    """Two-stage search settings for the bound fit.

    The coarse stage scans a ``grid_size`` x ``grid_size`` lattice over the
    histogram support widened by ``bracket_sigmas`` max-sigma; the simplex
    stage refines from the best cell in (lower bound, log-width) space.
    """

    grid_size: int = 41
    bracket_sigmas: float = 2.0
    simplex_max_iter: int = 400
    simplex_xatol: float = 1e-6
    simplex_fatol: float = 1e-14

    def __post_init__(self):
        if self.grid_size < 2:
            raise ConfigError("grid_size must be >= 2")
        if self.bracket_sigmas < 0:
            raise ConfigError("bracket_sigmas must be >= 0")


@dataclass(frozen=True, eq=False)
class ErrorHistogram:
    """Empirical forecast-error density on strictly increasing edges."""

    lead_hours: float
    edges: np.ndarray
    density: np.ndarray
    n_samples: int

    def __post_init__(self):
        edges = np.asarray(self.edges, dtype=float)
        density = np.asarray(self.density, dtype=float)
        object.__setattr__(self, "edges", edges)
        object.__setattr__(self, "density", density)
        if edges.ndim != 1 or edges.size < 2 or np.any(np.diff(edges) <= 0):
            raise ValueError("edges must be 1-D and strictly increasing")
        if density.shape != (edges.size - 1,):
            raise ValueError("density must have one value per bin")
        if np.any(density < 0):
            raise ValueError("density must be nonnegative")
        mass = float(np.sum(density * np.diff(edges)))
        if abs(mass - 1.0) > 1e-9:
            raise ValueError(f"density must integrate to 1, got {mass}")

    @property
    def centers(self) -> np.ndarray:
        return 0.5 * (self.edges[:-1] + self.edges[1:])

    @property
    def widths(self) -> np.ndarray:
        return np.diff(self.edges)


@dataclass(frozen=True)
class MixtureFit:
    """Fitted band bounds and the objective value they achieve."""

    mu_minus: float
    mu_plus: float
    objective: float
    lead_hours: float
    quadrature_points: int

    def __post_init__(self):
        if self.mu_minus > self.mu_plus:
            raise ValueError("mu_minus must be <= mu_plus")
        if self.objective < 0:
            raise ValueError("objective must be >= 0")


@dataclass(frozen=True)
class SingleGaussianFit:
    mean: float
    std: float
    objective: float

    def __post_init__(self):
        if self.std <= 0:
            raise ValueError("std must be positive")


@dataclass(frozen=True)
class SpeedUncertaintySet:
    """Speed-domain set: mean bounds shifted by the fitted band, std bounds
    from the variability law at those means."""

    forecast_mean: float
    mean_lo: float
    mean_hi: float
    sigma_lo: float
    sigma_hi: float

    def __post_init__(self):
        if self.mean_lo < 0 or self.mean_lo > self.mean_hi:
            raise ValueError("need 0 <= mean_lo <= mean_hi")


# ---------------------------------------------------------------------------
# Histogram


def build_error_histogram(
    errors: Sequence,
    lead_hours: float = 0.0,
    bin_width: float | None = None,
    min_samples: int = 30,
) -> ErrorHistogram:
    """Normalized histogram of error samples.

    ``errors`` may be raw values or :class:`ErrorSample` records. With
    ``bin_width=None`` the Freedman-Diaconis rule picks the width. Edges
    start half a bin below the smallest sample and extend half a bin past
    the largest.
    """
    values = np.asarray(
        [e.error if isinstance(e, ErrorSample) else float(e) for e in errors], dtype=float
    )
    if values.size < min_samples:
        raise InsufficientDataError(f"{values.size} error samples, need >= {min_samples}")
    lo, hi = float(values.min()), float(values.max())
    if hi - lo == 0:
        raise DegenerateDataError("all error samples identical; zero-width range")

    if bin_width is None:
        q25, q75 = np.percentile(values, [25.0, 75.0])
        iqr = q75 - q25
        if iqr > 0:
            bin_width = 2.0 * iqr / values.size ** (1.0 / 3.0)
        else:
            bin_width = (hi - lo) / math.ceil(math.sqrt(values.size))
    if bin_width <= 0:
        raise ConfigError(f"bin_width must be positive, got {bin_width}")

    start = lo - 0.5 * bin_width
    n_bins = math.ceil((hi + 0.5 * bin_width - start) / bin_width)
    edges = start + bin_width * np.arange(n_bins + 1)
    if edges[-1] <= hi:
        edges = np.append(edges, edges[-1] + bin_width)
    counts, _ = np.histogram(values, bins=edges)
    density = counts / (values.size * bin_width)
    return ErrorHistogram(lead_hours, edges, density, int(values.size))


# ---------------------------------------------------------------------------
# Band density


@lru_cache(maxsize=8)
def _gauss_legendre(order: int):
    return np.polynomial.legendre.leggauss(order)


def _sigma_kinks(mu_lo: float, mu_hi: float, vm: VariabilityModel):
    """Points in (mu_lo, mu_hi) where the variability law is not smooth:
    the domain clamp corners and the floor crossing."""
    kinks = [d for d in vm.domain if mu_lo < d < mu_hi]
    if vm.slope != 0:
        crossing = (vm.sigma_floor - vm.intercept) / vm.slope
        if vm.domain[0] < crossing < vm.domain[1] and mu_lo < crossing < mu_hi:
            kinks.append(crossing)
    return sorted(kinks)


def _band_nodes(mu_lo: float, mu_hi: float, vm: VariabilityModel, quad: QuadratureConfig):
    """Quadrature nodes over [mu_lo, mu_hi] and weights normalized by the
    band width, so the weighted component sum is already the band average.

    The band is first split where the law has kinks (Gauss-Legendre only
    converges spectrally on smooth pieces), then each piece is panelized
    against its own smallest sigma.
    """
    width = mu_hi - mu_lo
    cuts = [mu_lo] + _sigma_kinks(mu_lo, mu_hi, vm) + [mu_hi]
    segments = list(zip(cuts, cuts[1:]))

    panels = []
    for a, b in segments:
        sigma_min = min(vm.sigma(a), vm.sigma(b))
        panels.append(
            min(math.ceil((b - a) / (quad.panel_width_sigmas * sigma_min)), quad.max_panels)
        )
    total = sum(panels)
    if total > quad.max_panels:
        scale = quad.max_panels / total
        panels = [max(1, math.floor(p * scale)) for p in panels]
    elif total < quad.min_panels:
        widest = max(range(len(segments)), key=lambda i: segments[i][1] - segments[i][0])
        panels[widest] += quad.min_panels - total

    base_x, base_w = _gauss_legendre(quad.panel_order)
    mus = []
    weights = []
    for (a, b), n_panels in zip(segments, panels):
        edges = np.linspace(a, b, n_panels + 1)
        half = 0.5 * (edges[1:] - edges[:-1])
        mid = 0.5 * (edges[1:] + edges[:-1])
        mus.append((mid[:, None] + half[:, None] * base_x[None, :]).ravel())
        weights.append((half[:, None] * base_w[None, :]).ravel())
    return np.concatenate(mus), np.concatenate(weights) / width


def band_density(e, mu_minus: float, mu_plus: float, vm: VariabilityModel,
                 quad: QuadratureConfig | None = None):
    """Density of the uniform-mean Gaussian band at ``e`` (scalar or array).

    Bands narrower than the degeneracy threshold evaluate as the pointwise
    Gaussian at the band midpoint.
    """
    if mu_minus > mu_plus:
        raise ValueError(f"mu_minus {mu_minus} exceeds mu_plus {mu_plus}")
    quad = quad or QuadratureConfig()
    e_arr = np.ascontiguousarray(np.atleast_1d(np.asarray(e, dtype=float)))
    if mu_plus - mu_minus < quad.degenerate_width:
        mid = 0.5 * (mu_minus + mu_plus)
        mus = np.array([mid])
        weights = np.array([1.0])
    else:
        mus, weights = _band_nodes(mu_minus, mu_plus, vm, quad)
    sigmas = np.ascontiguousarray(vm.sigma(mus), dtype=float)
    out = kernels.mixture_pdf(e_arr, np.ascontiguousarray(mus), sigmas,
                              np.ascontiguousarray(weights))
    if np.ndim(e) == 0:
        return float(out[0])
    return out


def band_quadrature_size(mu_minus: float, mu_plus: float, vm: VariabilityModel,
                         quad: QuadratureConfig | None = None) -> int:
    """Number of quadrature nodes band_density uses for these bounds."""
    quad = quad or QuadratureConfig()
    if mu_plus - mu_minus < quad.degenerate_width:
        return 1
    mus, _ = _band_nodes(mu_minus, mu_plus, vm, quad)
    return mus.size


# ---------------------------------------------------------------------------
# L2 objective and fitting


def _objective_grid(hist: ErrorHistogram, vm: VariabilityModel, mu_range: tuple[float, float]):
    """Evaluation centers, empirical density and bin widths for the
    discretized L2 objective.

    Histogram centers are extended on both sides (with empirical density
    zero) by OBJECTIVE_MARGIN_SIGMAS times the largest sigma over
    ``mu_range``, in steps of the mean bin width.
    """
    sigma_max = max(vm.sigma(mu_range[0]), vm.sigma(mu_range[1]))
    margin = OBJECTIVE_MARGIN_SIGMAS * sigma_max
    step = float(np.mean(hist.widths))
    n_extra = math.ceil(margin / step)
    left = hist.edges[0] - step * np.arange(n_extra, 0, -1) + 0.5 * step
    right = hist.edges[-1] + step * np.arange(n_extra) + 0.5 * step
    centers = np.concatenate([left, hist.centers, right])
    f_emp = np.concatenate([np.zeros(n_extra), hist.density, np.zeros(n_extra)])
    widths = np.concatenate([np.full(n_extra, step), hist.widths, np.full(n_extra, step)])
    return np.ascontiguousarray(centers), f_emp, widths


def l2_objective(mu_minus: float, mu_plus: float, hist: ErrorHistogram,
                 vm: VariabilityModel, quad: QuadratureConfig | None = None) -> float:
    """Discretized squared L2 distance between the band density and the
    empirical histogram density."""
    if mu_minus > mu_plus:
        raise ValueError(f"mu_minus {mu_minus} exceeds mu_plus {mu_plus}")
    centers, f_emp, widths = _objective_grid(hist, vm, (mu_minus, mu_plus))
    model = band_density(centers, mu_minus, mu_plus, vm, quad)
    return float(np.sum((model - f_emp) ** 2 * widths))


def _search_bracket(hist: ErrorHistogram, vm: VariabilityModel, search: SearchConfig):
    e_lo, e_hi = float(hist.edges[0]), float(hist.edges[-1])
    sigma_bar = max(vm.sigma(e_lo), vm.sigma(e_hi))
    return e_lo - search.bracket_sigmas * sigma_bar, e_hi + search.bracket_sigmas * sigma_bar


def fit_mixture_bounds(
    hist: ErrorHistogram,
    vm: VariabilityModel,
    search: SearchConfig | None = None,
    quad: QuadratureConfig | None = None,
) -> MixtureFit:
    """Fit the band bounds by a coarse grid scan plus simplex refinement.

    The grid spans the bracket with the lower bound never above the upper;
    refinement runs in (lower bound, log band width) coordinates so the
    ordering constraint holds by construction. Deterministic for fixed
    inputs and configuration; the refined result is never worse than the
    best grid cell.
    """
    search = search or SearchConfig()
    quad = quad or QuadratureConfig()
    b_lo, b_hi = _search_bracket(hist, vm, search)
    centers, f_emp, widths = _objective_grid(hist, vm, (b_lo, b_hi))

    def objective(mu_m, mu_p):
        model = band_density(centers, mu_m, mu_p, vm, quad)
        return float(np.sum((model - f_emp) ** 2 * widths))

    grid = np.linspace(b_lo, b_hi, search.grid_size)
    best_val = math.inf
    best_pair = (grid[0], grid[0])
    for i, lo in enumerate(grid):
        for hi in grid[i:]:
            val = objective(lo, hi)
            if val < best_val:
                best_val = val
                best_pair = (float(lo), float(hi))

    width0 = max(best_pair[1] - best_pair[0], 1e-8)

    def transformed(p):
        lo = p[0]
        band = math.exp(min(p[1], 50.0))
        return objective(lo, lo + band)

    result = optimize.minimize(
        transformed,
        x0=np.array([best_pair[0], math.log(width0)]),
        method="Nelder-Mead",
        options={
            "maxiter": search.simplex_max_iter,
            "xatol": search.simplex_xatol,
            "fatol": search.simplex_fatol,
        },
    )
    refined_pair = (float(result.x[0]), float(result.x[0] + math.exp(min(result.x[1], 50.0))))
    refined_val = float(result.fun)

    if refined_val <= best_val:
        best_pair, best_val = refined_pair, refined_val
    return MixtureFit(
        mu_minus=best_pair[0],
        mu_plus=best_pair[1],
        objective=best_val,
        lead_hours=hist.lead_hours,
        quadrature_points=band_quadrature_size(best_pair[0], best_pair[1], vm, quad),
    )


def fit_single_gaussian(
    hist: ErrorHistogram,
    vm: VariabilityModel,
    search: SearchConfig | None = None,
) -> SingleGaussianFit:
    """Best single Gaussian under the same discretized L2 objective.

    Shares the evaluation grid with :func:`fit_mixture_bounds` so the two
    objective values are directly comparable. Initialized at the histogram
    moments, refined in (mean, log std) coordinates.
    """
    search = search or SearchConfig()
    b_lo, b_hi = _search_bracket(hist, vm, search)
    centers, f_emp, widths = _objective_grid(hist, vm, (b_lo, b_hi))

    mass = hist.density * hist.widths
    mean0 = float(np.sum(hist.centers * mass))
    var0 = float(np.sum((hist.centers - mean0) ** 2 * mass))
    if var0 <= 0:
        raise DegenerateDataError("histogram has no spread; cannot fit a Gaussian")
    std0 = math.sqrt(var0)

    e_arr = np.ascontiguousarray(centers)
    unit = np.array([1.0])

    def objective(mean, std):
        model = kernels.mixture_pdf(e_arr, np.array([mean]), np.array([std]), unit)
        return float(np.sum((model - f_emp) ** 2 * widths))

    def transformed(p):
        return objective(p[0], math.exp(min(p[1], 50.0)))

    result = optimize.minimize(
        transformed,
        x0=np.array([mean0, math.log(std0)]),
        method="Nelder-Mead",
        options={
            "maxiter": search.simplex_max_iter,
            "xatol": search.simplex_xatol,
            "fatol": search.simplex_fatol,
        },
    )
    mean, std = float(result.x[0]), float(math.exp(min(result.x[1], 50.0)))
    val = float(result.fun)
    if objective(mean0, std0) < val:
        mean, std, val = mean0, std0, objective(mean0, std0)
    return SingleGaussianFit(mean=mean, std=std, objective=val)


def speed_uncertainty_set(
    forecast_mean: float, fit: MixtureFit, vm: VariabilityModel
) -> SpeedUncertaintySet:
    """Shift the fitted band by the forecast mean and evaluate the
    variability law at both bounds. The lower mean is clamped at zero
    (wind speed cannot be negative)."""
    if forecast_mean < 0:
        raise ValueError(f"forecast_mean must be >= 0, got {forecast_mean}")
    mean_lo = max(0.0, forecast_mean + fit.mu_minus)
    mean_hi = max(mean_lo, forecast_mean + fit.mu_plus)
    return SpeedUncertaintySet(
        forecast_mean=forecast_mean,
        mean_lo=mean_lo,
        mean_hi=mean_hi,
        sigma_lo=vm.sigma(mean_lo),
        sigma_hi=vm.sigma(mean_hi),
    )
