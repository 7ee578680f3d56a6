"""Uncertainty sets for wind power generation.

Builds distribution-parameter intervals for wind generation from
historical wind-speed measurements and forecasts: an affine intra-hour
variability law, forecast-error band bounds fit against the empirical
error density, and their conversion through a turbine power curve.
"""

__version__ = "0.1.0"

from .errors import (
    ConfigError,
    DegenerateDataError,
    DuplicateKeyError,
    EmptyJoinError,
    EmptySelectionError,
    FitError,
    InputError,
    InsufficientDataError,
    MalformedRowError,
    StageError,
    WindbandError,
)
from .ingest import (
    ErrorSample,
    ForecastRecord,
    HourlyRecord,
    WindowFilter,
    WindSpeedSample,
    WindSpeedSeries,
    aggregate_hourly,
    align_errors,
    filter_window,
    parse_forecast_series,
    parse_speed_series,
)
from .power import (
    PowerCurve,
    PowerInterval,
    PowerUncertaintySet,
    power_interval,
    power_uncertainty_set,
    sigma_power_bounds,
    sigma_power_point,
)
from .synth import SyntheticSpec, generate, sample_band_errors
from .uncertainty import (
    ErrorHistogram,
    MixtureFit,
    QuadratureConfig,
    SearchConfig,
    SingleGaussianFit,
    SpeedUncertaintySet,
    band_density,
    build_error_histogram,
    fit_mixture_bounds,
    fit_single_gaussian,
    l2_objective,
    speed_uncertainty_set,
)
from .variability import (
    BinConfig,
    BinFit,
    VariabilityModel,
    bin_by_mean,
    build_variability_model,
    fit_bin_gaussian,
    fit_sigma_law,
)
