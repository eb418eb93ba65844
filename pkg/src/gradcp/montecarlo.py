"""Data generators for the simulation designs and a replication harness.

Mean designs (AR(1) errors eps_t = 0.25 eps_{t-1} + eta_t, eta ~ N(0, 0.5^2),
eps_0 stationary):

    mu0(u) = 0                                                   (null)
    mu1(u) = 1(u > 0.5)                                          (jump)
    mu2(u) = 10(u - 0.5) 1(0.5 < u < 0.6) + 1(u > 0.6)           (gradual)
    mu3(u) = 10u 1(0 <= u < 0.2) + (2 - 2.5(u - 0.2)) 1(u >= 0.2)

mu4/mu5 use i.i.d. N(0, 0.2^2) errors:

    mu4(u) = 2(u - 0.5) 1(u > 0.5)
    mu5(u) = 10(u - 0.5) 1(0.5 < u < 0.6) + 1(u >= 0.6)

Volatility designs X = sigma(t/T) eps, eps i.i.d. N(0,1):

    sigma1(u) = 1(u < 0.5) + 2 * 1(u >= 0.5)
    sigma2(u) = 1(u < 0.5) + (1 + 10(u - 0.5)) 1(0.5 < u < 0.6) + 2 * 1(u >= 0.6)

Bivariate designs X = Sigma_k(t/T) eps with Sigma_k = sigma_k * A and
A A^T = [[1, 0.5], [0.5, 1]] (A = [[sqrt(3)/2, -1/2], [sqrt(3)/2, 1/2]]).
The seasonal design adds a period-12 zero-sum component s(t) to a constant
mean with AR(1) errors.

The indicator formulas are kept exactly as printed, including the
single-point quirks mu2(0.6) = 0 and sigma2(0.5) = 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .detector import DetectionConfig, DetectionResult, detect
from .gpsim import QuantileCurve, pivotal_driver, quantile_curve
from .series import SeriesSample

AR_COEF = 0.25
AR_INNOV_SD = 0.5
IID_SD = 0.2
HIST_BINS = 40

# A A^T = [[1, 0.5], [0.5, 1]]
MIXING_A = np.array([[math.sqrt(3.0) / 2.0, -0.5], [math.sqrt(3.0) / 2.0, 0.5]])


def mu0(u: np.ndarray) -> np.ndarray:
    return np.zeros_like(u)


def mu1(u: np.ndarray) -> np.ndarray:
    return (u > 0.5).astype(np.float64)


def mu2(u: np.ndarray) -> np.ndarray:
    return 10.0 * (u - 0.5) * ((u > 0.5) & (u < 0.6)) + 1.0 * (u > 0.6)


def mu3(u: np.ndarray) -> np.ndarray:
    return 10.0 * u * (u < 0.2) + (2.0 - 2.5 * (u - 0.2)) * (u >= 0.2)


def mu4(u: np.ndarray) -> np.ndarray:
    return 2.0 * (u - 0.5) * (u > 0.5)


def mu5(u: np.ndarray) -> np.ndarray:
    return 10.0 * (u - 0.5) * ((u > 0.5) & (u < 0.6)) + 1.0 * (u >= 0.6)


def sigma1(u: np.ndarray) -> np.ndarray:
    return 1.0 * (u < 0.5) + 2.0 * (u >= 0.5)


def sigma2(u: np.ndarray) -> np.ndarray:
    return 1.0 * (u < 0.5) + (1.0 + 10.0 * (u - 0.5)) * ((u > 0.5) & (u < 0.6)) + 2.0 * (u >= 0.6)


MEAN_AR1_MODELS: dict[str, Callable] = {"mu0": mu0, "mu1": mu1, "mu2": mu2, "mu3": mu3}
MEAN_IID_MODELS: dict[str, Callable] = {"mu4": mu4, "mu5": mu5}
VOL_MODELS: dict[str, Callable] = {"sigma1": sigma1, "sigma2": sigma2}
BIVOL_MODELS: dict[str, Callable] = {"Sigma1": sigma1, "Sigma2": sigma2}

MODEL_TOKENS = (
    "mu0", "mu1", "mu2", "mu3", "mu4", "mu5",
    "sigma1", "sigma2", "Sigma1", "Sigma2", "seasonal",
)

TRUE_U0 = {
    "mu0": 1.0,
    "mu1": 0.5,
    "mu2": 0.5,
    "mu3": 0.0,
    "mu4": 0.5,
    "mu5": 0.5,
    "sigma1": 0.5,
    "sigma2": 0.5,
    "Sigma1": 0.5,
    "Sigma2": 0.5,
    "seasonal": 1.0,
}


@dataclass(frozen=True)
class ModelSpec:
    """One simulation design: model token, length, seed and seasonal knobs."""

    model: str
    n_obs: int
    seed: int = 0
    seasonal_amplitude: float = 1.0
    seasonal_period: int = 12

    def __post_init__(self) -> None:
        if self.model not in MODEL_TOKENS:
            raise ValueError(f"unknown model {self.model!r}; choose from {MODEL_TOKENS}")
        if self.n_obs < 2:
            raise ValueError("need n_obs >= 2")
        if self.seasonal_period < 1:
            raise ValueError("seasonal period must be positive")

    @property
    def u0_true(self) -> float:
        return TRUE_U0[self.model]


def _ar1_errors(rng: np.random.Generator, n: int) -> np.ndarray:
    eta = rng.normal(0.0, AR_INNOV_SD, size=n)
    eps = np.empty(n, dtype=np.float64)
    # start from the stationary law N(0, sd^2 / (1 - phi^2))
    prev = rng.normal(0.0, AR_INNOV_SD / math.sqrt(1.0 - AR_COEF * AR_COEF))
    for t in range(n):
        prev = AR_COEF * prev + eta[t]
        eps[t] = prev
    return eps


def _seasonal(n: int, amplitude: float, period: int) -> np.ndarray:
    t = np.arange(1, n + 1, dtype=np.float64)
    return amplitude * np.sin(2.0 * math.pi * t / period)


def generate(spec: ModelSpec, seed: Optional[int] = None) -> SeriesSample:
    """Draw one sample from the design; ``seed`` overrides ``spec.seed``."""
    rng = np.random.default_rng(spec.seed if seed is None else seed)
    n = spec.n_obs
    u = np.arange(1, n + 1, dtype=np.float64) / n
    model = spec.model
    origin = {"model": model}

    if model in MEAN_AR1_MODELS:
        x = MEAN_AR1_MODELS[model](u) + _ar1_errors(rng, n)
    elif model in MEAN_IID_MODELS:
        x = MEAN_IID_MODELS[model](u) + rng.normal(0.0, IID_SD, size=n)
    elif model in VOL_MODELS:
        x = VOL_MODELS[model](u) * rng.standard_normal(n)
    elif model in BIVOL_MODELS:
        eps = rng.standard_normal((n, 2))
        x = BIVOL_MODELS[model](u)[:, None] * (eps @ MIXING_A.T)
    elif model == "seasonal":
        x = _seasonal(n, spec.seasonal_amplitude, spec.seasonal_period) + _ar1_errors(rng, n)
    else:  # pragma: no cover
        raise ValueError(f"unknown model {model!r}")
    return SeriesSample(x, origin)


def default_config(model: str, **overrides) -> DetectionConfig:
    """Reference detector settings for each built-in design.

    Mean designs use the sigma-scaled pivotal statistic (AR(1) designs with
    smoothing-residual HAC, h = 0.2 and b = 10; the i.i.d. designs mu4/mu5
    with the first-difference variance). Volatility designs use the
    estimated kernel with Nadaraya-Watson centering, h = 0.2 and b = 0.
    """
    if model in ("mu0", "mu1", "mu2", "mu3", "seasonal"):
        base = dict(feature="mean", scaled=True, sigma_method="residual",
                    nw_bandwidth=0.2, hac_bandwidth=10.0, hac_kernel="bartlett")
    elif model in ("mu4", "mu5"):
        base = dict(feature="mean", scaled=True, sigma_method="diff")
    elif model in ("sigma1", "sigma2"):
        base = dict(feature="variance", scaled=False, centering="nw",
                    nw_bandwidth=0.2, hac_bandwidth=0.0)
    elif model in ("Sigma1", "Sigma2"):
        base = dict(feature="cov", scaled=False, centering="nw",
                    nw_bandwidth=0.2, hac_bandwidth=0.0)
    else:
        raise ValueError(f"unknown model {model!r}")
    base.update(overrides)
    return DetectionConfig(**base)


@dataclass(frozen=True)
class StudySummary:
    """Replication results: estimates, histogram and headline statistics."""

    model: str
    n_obs: int
    n_replicates: int
    u0_true: float
    estimates: np.ndarray
    prelim_estimates: np.ndarray
    n_failed: int
    failures: tuple[str, ...]
    master_seed: int
    config: dict
    bin_edges: np.ndarray = field(default_factory=lambda: np.array([]))
    counts: np.ndarray = field(default_factory=lambda: np.array([]))

    def __post_init__(self) -> None:
        if self.bin_edges.size == 0:
            edges = np.linspace(0.0, 1.0, HIST_BINS + 1)
            counts, _ = np.histogram(self.estimates, bins=edges)
            object.__setattr__(self, "bin_edges", edges)
            object.__setattr__(self, "counts", counts)

    @property
    def median(self) -> float:
        return float(np.median(self.estimates))

    @property
    def iqr(self) -> float:
        lo, hi = np.quantile(self.estimates, [0.25, 0.75])
        return float(hi - lo)

    @property
    def underestimation_fraction(self) -> float:
        """Share of final estimates strictly below the design's true u0."""
        return float(np.mean(self.estimates < self.u0_true))

    @property
    def prelim_detection_fraction(self) -> float:
        """Share of preliminary estimates below 1 (a change was declared)."""
        return float(np.mean(self.prelim_estimates < 1.0))

    def to_dict(self) -> dict:
        return {
            "model": self.model,
            "T": self.n_obs,
            "N": self.n_replicates,
            "u0_true": self.u0_true,
            "median": self.median,
            "iqr": self.iqr,
            "underestimation_fraction": self.underestimation_fraction,
            "prelim_detection_fraction": self.prelim_detection_fraction,
            "n_failed": self.n_failed,
            "master_seed": self.master_seed,
            "estimates": [float(v) for v in self.estimates],
            "prelim_estimates": [float(v) for v in self.prelim_estimates],
            "config": self.config,
        }

    def histogram_rows(self):
        for k in range(self.counts.shape[0]):
            yield (self.bin_edges[k], self.bin_edges[k + 1], int(self.counts[k]))


def replicate_seed(master_seed: int, index: int) -> int:
    """Deterministic per-replicate seed (counter-based splitting)."""
    ss = np.random.SeedSequence(master_seed, spawn_key=(index,))
    return int(ss.generate_state(1, np.uint64)[0])


def run_study(
    spec: ModelSpec,
    n_replicates: int,
    config: Optional[DetectionConfig] = None,
    master_seed: int = 0,
    threads: Optional[int] = None,
) -> StudySummary:
    """Generate-and-detect over independent replicates.

    When the configuration is on the scaled/pivotal route, the quantile curve
    does not depend on the data and is simulated once and shared. Failed
    replicates are recorded and excluded from the estimates.
    """
    if n_replicates < 1:
        raise ValueError("need at least one replicate")
    if config is None:
        config = default_config(spec.model)

    shared_curve: Optional[QuantileCurve] = None
    scaled = config.scaled if config.scaled is not None else config.feature == "mean"
    if scaled:
        lag = int(config.feature.split(":")[1]) if config.feature.startswith("acf:") else 0
        n_eff = spec.n_obs - lag
        m = config.grid_size if config.grid_size is not None else min(n_eff, 512)
        from .series import RescaledGrid

        shared_curve = quantile_curve(
            pivotal_driver(RescaledGrid.equispaced(m), config.n_draws, config.seed),
            config.alpha,
        )

    def one(rep: int) -> DetectionResult:
        sample = generate(spec, seed=replicate_seed(master_seed, rep))
        return detect(sample, config, quantiles=shared_curve)

    results: list[Optional[DetectionResult]] = [None] * n_replicates
    failures: list[str] = []
    if threads and threads > 1:
        from concurrent.futures import ThreadPoolExecutor

        with ThreadPoolExecutor(max_workers=threads) as pool:
            futs = {pool.submit(one, rep): rep for rep in range(n_replicates)}
            for fut, rep in futs.items():
                try:
                    results[rep] = fut.result()
                except ValueError as exc:
                    failures.append(f"replicate {rep}: {exc}")
    else:
        for rep in range(n_replicates):
            try:
                results[rep] = one(rep)
            except ValueError as exc:
                failures.append(f"replicate {rep}: {exc}")

    ok = [r for r in results if r is not None]
    if not ok:
        raise ValueError(f"all {n_replicates} replicates failed; first error: {failures[0]}")
    estimates = np.array([r.u_hat for r in ok])
    prelim = np.array([r.u_hat_prelim for r in ok])
    return StudySummary(
        model=spec.model,
        n_obs=spec.n_obs,
        n_replicates=n_replicates,
        u0_true=spec.u0_true,
        estimates=estimates,
        prelim_estimates=prelim,
        n_failed=len(failures),
        failures=tuple(failures),
        master_seed=master_seed,
        config=config.to_dict(),
    )
