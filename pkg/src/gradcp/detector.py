"""Two-step gradual change point estimation.

The pipeline: build the time-variation profile of the chosen feature, scale
it by a long-run standard deviation when the pivotal route applies, simulate
the quantile curve of the limiting running-sup variable, then

1. tau_prelim = q(1); preliminary estimate = mean of the indicator profile
   1{sqrt(T) dsup(u) <= tau_prelim} over the grid,
2. tau_refined = q(preliminary estimate) (floored at the first grid point);
   final estimate = mean of the indicator profile at tau_refined.

The estimate realizes the integral of the indicator over [0,1] exactly,
since the indicator is piecewise constant on the grid. Reverse-direction
detection runs the same machinery on the time-reversed series and reports
1 - estimate, i.e. the start of the terminal stability span.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .features import FeatureFamily, embed_lags, parse_family_token
from .gpsim import GaussianDriver, QuantileCurve, estimated_driver, pivotal_driver, quantile_curve
from .lrv import KernelSpec, _nw_smooth, diff_variance, hac_sigma, residual_lrv
from .series import RescaledGrid, SeriesSample, build_prefix_sums
from .tvmeasure import TimeVariationSurface, dsup_profile, scale_surface

DEFAULT_SIM_GRID = 512


@dataclass(frozen=True)
class DetectionConfig:
    """Settings of one detection run.

    Parameters
    ----------
    feature : str
        Family token: ``mean | variance | acf:<p> | cov``.
    alpha : float
        Level controlling the probability of underestimating the change
        point; default 0.1.
    direction : {"forward", "reverse"}
        "reverse" estimates the start of the terminal stability span.
    scaled : bool, optional
        Use the sigma-normalized statistic with the pivotal (known) kernel.
        Defaults to True for the mean family, False otherwise; forcing it on
        for other families requires a univariate series and is the user's
        approximation to accept.
    sigma_method : {"residual", "diff"}
        Long-run variance estimate used when ``scaled``: smoothing residuals
        plus HAC, or the first-difference estimator for i.i.d. errors.
    nw_bandwidth : float
        Smoothing bandwidth h in rescaled time (residuals / HAC centering).
    hac_bandwidth : float
        HAC lag bandwidth b (0 = lag zero only, the i.i.d. shortcut).
    hac_kernel : {"bartlett", "flattop"}
    centering : {"nw", "global", "none"}
        Centering of the feature series inside the HAC estimator
        (estimated-kernel route).
    precenter : {"none", "global", "nw"}
        Optional pre-centering of the raw observations before the feature
        family is applied (second-moment families assume centred variables).
    n_draws, seed, grid_size : int
        Gaussian-process simulation budget, master seed and grid size
        (grid_size defaults to min(T, 512)).
    method : {"auto", "brute", "hull"}
        Scan method for the time-variation profile.
    """

    feature: str = "mean"
    alpha: float = 0.1
    direction: str = "forward"
    scaled: Optional[bool] = None
    sigma_method: str = "residual"
    nw_bandwidth: float = 0.2
    hac_bandwidth: float = 10.0
    hac_kernel: str = "bartlett"
    centering: str = "nw"
    smooth_kernel: str = "epanechnikov"
    precenter: str = "none"
    n_draws: int = 2000
    seed: int = 0
    grid_size: Optional[int] = None
    method: str = "auto"

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        if self.direction not in ("forward", "reverse"):
            raise ValueError("direction must be 'forward' or 'reverse'")
        if self.sigma_method not in ("residual", "diff"):
            raise ValueError("sigma_method must be 'residual' or 'diff'")
        if self.precenter not in ("none", "global", "nw"):
            raise ValueError("precenter must be 'none', 'global' or 'nw'")

    def kernel_spec(self) -> KernelSpec:
        return KernelSpec(self.hac_kernel, self.hac_bandwidth)

    def to_dict(self) -> dict:
        return {
            "feature": self.feature,
            "alpha": self.alpha,
            "direction": self.direction,
            "scaled": self.scaled,
            "sigma_method": self.sigma_method,
            "nw_bandwidth": self.nw_bandwidth,
            "hac_bandwidth": self.hac_bandwidth,
            "hac_kernel": self.hac_kernel,
            "centering": self.centering,
            "smooth_kernel": self.smooth_kernel,
            "precenter": self.precenter,
            "n_draws": self.n_draws,
            "seed": self.seed,
            "grid_size": self.grid_size,
            "method": self.method,
        }


@dataclass(frozen=True)
class DetectionResult:
    """Preliminary and final estimates with full provenance."""

    u_hat: float
    u_hat_prelim: float
    tau_refined: float
    tau_prelim: float
    alpha: float
    direction: str
    feature: str
    n_obs: int
    grid_size: int
    seed: int
    sigma_hat: Optional[float]
    r_profile: np.ndarray
    surface: TimeVariationSurface = field(repr=False)
    quantiles: QuantileCurve = field(repr=False)

    def to_dict(self) -> dict:
        out = {
            "u_hat": self.u_hat,
            "u_hat_prelim": self.u_hat_prelim,
            "tau_prelim": self.tau_prelim,
            "tau_refined": self.tau_refined,
            "alpha": self.alpha,
            "direction": self.direction,
            "feature": self.feature,
            "T": self.n_obs,
            "grid_size": self.grid_size,
            "seed": self.seed,
        }
        if self.sigma_hat is not None:
            out["sigma_hat"] = self.sigma_hat
        return out


def indicator_profile(surface: TimeVariationSurface, tau: float, n: int | None = None) -> np.ndarray:
    """Binary acceptance profile 1{sqrt(T) dsup(u_j) <= tau} (inclusive)."""
    if not np.isfinite(tau) or tau <= 0:
        raise ValueError("tau must be a positive finite threshold")
    if n is None:
        n = surface.n
    return (math.sqrt(n) * surface.dsup <= tau).astype(np.int8)


def refine_threshold(curve: QuantileCurve, u_prelim: float) -> float:
    """Quantile curve evaluated at the preliminary estimate, floored at the
    first grid point (the curve degenerates to 0 at u = 0)."""
    if not 0 <= u_prelim <= 1:
        raise ValueError("u_prelim must lie in [0, 1]")
    u_min = float(curve.grid.points[0])
    return curve.value_at(max(u_prelim, u_min))


def _precenter(sample: SeriesSample, mode: str, h: float, smooth_kernel: str) -> SeriesSample:
    if mode == "none":
        return sample
    values = sample.values.copy()
    if mode == "global":
        values -= values.mean(axis=0, keepdims=True)
    else:
        for c in range(values.shape[1]):
            values[:, c] -= _nw_smooth(values[:, c], h, smooth_kernel)
    origin = dict(sample.origin)
    origin["precenter"] = mode
    return SeriesSample(values, origin)


def _resolve_family(config: DetectionConfig, d: int) -> FeatureFamily:
    return parse_family_token(config.feature, d=d)


def detect(
    sample: SeriesSample,
    config: DetectionConfig,
    quantiles: QuantileCurve | None = None,
) -> DetectionResult:
    """Run the full two-step estimator.

    Parameters
    ----------
    sample : SeriesSample
    config : DetectionConfig
    quantiles : QuantileCurve, optional
        Precomputed quantile curve (must match the run's simulation grid and
        level); pass it to share one pivotal curve across many runs.

    Returns
    -------
    DetectionResult
        Estimates on the original rescaled-time scale. For reverse runs the
        estimates are mapped through u -> 1 - u, so ``u_hat`` is the start of
        the stability span [u_hat, 1]; ``r_profile`` and ``surface`` stay on
        the working (reversed, possibly lag-embedded) time scale.
    """
    work = sample.reversed() if config.direction == "reverse" else sample
    family = _resolve_family(config, work.dim)
    lag = family.embedding_lag
    if lag > 0:
        work = embed_lags(work, lag)
    work = _precenter(work, config.precenter, config.nw_bandwidth, config.smooth_kernel)

    n = work.n_obs
    t_orig = sample.n_obs
    prefix = build_prefix_sums(work, family)
    surface = dsup_profile(prefix, family, method=config.method)

    scaled = config.scaled if config.scaled is not None else family.kind == "mean"
    m = config.grid_size if config.grid_size is not None else min(n, DEFAULT_SIM_GRID)
    sim_grid = RescaledGrid.equispaced(m)

    sigma_hat: float | None = None
    if scaled:
        if work.dim != 1:
            raise ValueError("the scaled (pivotal) statistic needs a univariate series")
        if config.sigma_method == "diff":
            sigma2 = diff_variance(work)
            if sigma2 <= 0:
                raise ValueError("degenerate first-difference variance (constant series)")
        else:
            sigma2 = residual_lrv(
                work, h=config.nw_bandwidth, kernel=config.kernel_spec(),
                smooth_kernel=config.smooth_kernel,
            )
        sigma_hat = math.sqrt(sigma2)
        surface = scale_surface(surface, sigma_hat)
        driver: GaussianDriver = pivotal_driver(sim_grid, config.n_draws, config.seed)
    else:
        lrv_idx = (sim_grid.indices.astype(np.int64) * n) // m
        lrv_grid = RescaledGrid(np.unique(lrv_idx), n)
        cov = hac_sigma(
            work,
            family,
            kernel=config.kernel_spec(),
            centering=config.centering,
            grid=lrv_grid,
            h=config.nw_bandwidth,
            smooth_kernel=config.smooth_kernel,
        )
        driver = estimated_driver(cov, config.n_draws, config.seed, grid=sim_grid)

    curve = quantiles if quantiles is not None else quantile_curve(driver, config.alpha)
    if curve.grid.size != m:
        raise ValueError("precomputed quantile curve does not match the simulation grid")

    tau_prelim = float(curve.q[-1])  # q(1)
    r_prelim = indicator_profile(surface, tau_prelim, n)
    u_prelim = float(r_prelim.mean())
    tau_refined = refine_threshold(curve, u_prelim)
    r_final = indicator_profile(surface, tau_refined, n)
    u_final = float(r_final.mean())

    def map_back(u: float) -> float:
        if lag > 0:
            u = (u * n + lag) / t_orig
        if config.direction == "reverse":
            u = 1.0 - u
        return u

    return DetectionResult(
        u_hat=map_back(u_final),
        u_hat_prelim=map_back(u_prelim),
        tau_refined=tau_refined,
        tau_prelim=tau_prelim,
        alpha=config.alpha,
        direction=config.direction,
        feature=config.feature,
        n_obs=t_orig,
        grid_size=m,
        seed=config.seed,
        sigma_hat=sigma_hat,
        r_profile=r_final,
        surface=surface,
        quantiles=curve,
    )
