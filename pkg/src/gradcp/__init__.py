"""Gradual change point estimation for locally stationary time series.

Estimates the rescaled time point at which a chosen stochastic feature
(mean, variance, autocovariances, cross-covariances) of an observed series
starts to vary, using a CUSUM-based measure of time-variation, simulated
Gaussian-process quantiles and a two-step threshold choice.
"""

from .detector import DetectionConfig, DetectionResult, detect, indicator_profile, refine_threshold
from .errors import DataError
from .features import FeatureFamily, embed_lags, make_family, parse_family_token
from .gpsim import (
    GaussianDriver,
    QuantileCurve,
    estimated_driver,
    hmax_draw,
    pivotal_driver,
    quantile_curve,
    simulate_driver_path,
)
from .kernels import backend_name
from .lrv import KernelSpec, LongRunCovariance, diff_variance, hac_sigma, nw_mean, residual_lrv
from .montecarlo import ModelSpec, StudySummary, default_config, generate, run_study
from .series import PrefixSums, RescaledGrid, SeriesSample, build_prefix_sums, load_series
from .tvmeasure import TimeVariationSurface, dhat, dsup_profile, scale_surface

__version__ = "0.1.0"

__all__ = [
    "DataError",
    "DetectionConfig",
    "DetectionResult",
    "FeatureFamily",
    "GaussianDriver",
    "KernelSpec",
    "LongRunCovariance",
    "ModelSpec",
    "PrefixSums",
    "QuantileCurve",
    "RescaledGrid",
    "SeriesSample",
    "StudySummary",
    "TimeVariationSurface",
    "backend_name",
    "build_prefix_sums",
    "default_config",
    "detect",
    "dhat",
    "diff_variance",
    "dsup_profile",
    "embed_lags",
    "estimated_driver",
    "generate",
    "hac_sigma",
    "hmax_draw",
    "indicator_profile",
    "load_series",
    "make_family",
    "nw_mean",
    "parse_family_token",
    "pivotal_driver",
    "quantile_curve",
    "refine_threshold",
    "residual_lrv",
    "run_study",
    "scale_surface",
    "simulate_driver_path",
    "__version__",
]
