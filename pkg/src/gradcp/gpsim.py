"""Simulation of the limiting Gaussian process and its quantile curves.

The limit of the scaled CUSUM contrast decomposes as

    H(u, v, f) = G(v, f) - (v/u) G(u, f),

where G is a Gaussian process with independent increments across grid steps.
Two drivers are supported:

- pivotal: the sigma-normalized mean statistic, where G is a standard
  Brownian motion (one pseudo-feature, increment variance = step width) and
  the covariance kernel contains no unknowns;
- estimated: increments with covariance Sigma(u_k) - Sigma(u_{k-1}) taken
  from a HAC long-run covariance grid, eigenvalue-clipped to be positive
  semidefinite and sampled through a symmetric matrix square root.

``hmax_draw`` turns a driver path into the running supremum over all
sub-intervals (the variable whose quantiles calibrate the detection
thresholds); ``quantile_curve`` aggregates many draws into the empirical
(1-alpha)-quantile per grid point.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .kernels import get_backend
from .lrv import LongRunCovariance
from .series import RescaledGrid

logger = logging.getLogger(__name__)

PSD_WARN_RATIO = 1e-8
MIN_QUANTILE_DRAWS = 100


@dataclass(frozen=True)
class GaussianDriver:
    """Increment factors of the limit process G on a simulation grid.

    ``factors`` has shape (m, F, F): the symmetric square roots of the
    per-step increment covariances. Use :func:`pivotal_driver` or
    :func:`estimated_driver` to construct one.
    """

    grid: RescaledGrid
    n_draws: int
    seed: int
    factors: np.ndarray
    labels: tuple[str, ...]
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in ("pivotal", "estimated"):
            raise ValueError(f"unknown driver kind {self.kind!r}")
        if self.n_draws < 1:
            raise ValueError("n_draws must be positive")
        fac = np.asarray(self.factors, dtype=np.float64)
        nf = len(self.labels)
        if fac.shape != (self.grid.size, nf, nf):
            raise ValueError("factors must have shape (grid size, F, F)")
        fac.setflags(write=False)
        object.__setattr__(self, "factors", fac)

    @property
    def n_features(self) -> int:
        return len(self.labels)


@dataclass(frozen=True)
class QuantileCurve:
    """Estimated (1-alpha)-quantiles of the running-sup limit variable.

    ``q`` is non-decreasing in u (enforced by an isotonic pass after
    simulation); ``n_draws`` and ``seed`` record provenance.
    """

    grid: RescaledGrid
    alpha: float
    q: np.ndarray
    n_draws: int
    seed: int

    def __post_init__(self) -> None:
        if not 0 < self.alpha < 1:
            raise ValueError("alpha must lie in (0, 1)")
        q = np.asarray(self.q, dtype=np.float64)
        if q.shape != (self.grid.size,):
            raise ValueError("q length must match the grid")
        if np.any(np.diff(q) < 0):
            raise ValueError("quantile curve must be non-decreasing")
        q.setflags(write=False)
        object.__setattr__(self, "q", q)

    def value_at(self, u: float) -> float:
        """Linear interpolation of the curve (clamped at the grid ends)."""
        return float(np.interp(u, self.grid.points, self.q))


def pivotal_driver(grid: RescaledGrid, n_draws: int, seed: int) -> GaussianDriver:
    """Driver for the sigma-scaled statistic: G is a unit-rate Brownian motion."""
    pts = np.concatenate(([0.0], grid.points))
    inc = np.diff(pts)
    factors = np.sqrt(inc)[:, None, None]
    return GaussianDriver(
        grid=grid, n_draws=n_draws, seed=seed, factors=factors, labels=("sc",), kind="pivotal"
    )


def _psd_sqrt(mat: np.ndarray, step: int) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if not np.all(np.isfinite(vals)):
        raise ValueError(f"increment covariance at step {step} is not factorizable")
    trace = float(np.trace(mat))
    floor = -PSD_WARN_RATIO * max(trace, 0.0)
    if vals[0] < floor:
        logger.warning(
            "increment covariance at step %d repaired: clipping eigenvalue %.3e (trace %.3e)",
            step,
            vals[0],
            trace,
        )
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ vecs.T


def estimated_driver(
    lrv: LongRunCovariance,
    n_draws: int,
    seed: int,
    grid: RescaledGrid | None = None,
) -> GaussianDriver:
    """Driver with increment covariances Sigma(u_k) - Sigma(u_{k-1}) from a HAC grid.

    The covariance grid must refine the simulation grid: every simulation
    point u_k must have its floor index floor(u_k * n) on the covariance grid.
    Differences that fail positive semidefiniteness by more than a relative
    1e-8 of the trace are eigenvalue-clipped with a logged warning.
    """
    if grid is None:
        grid = lrv.grid
    n = lrv.grid.denom
    m = grid.denom
    data_idx = (grid.indices.astype(np.int64) * n) // m
    sigma = lrv.at_indices(data_idx)
    nf = len(lrv.labels)
    factors = np.empty_like(sigma)
    prev = np.zeros((nf, nf), dtype=np.float64)
    for k in range(sigma.shape[0]):
        factors[k] = _psd_sqrt(sigma[k] - prev, k)
        prev = sigma[k]
    return GaussianDriver(
        grid=grid, n_draws=n_draws, seed=seed, factors=factors, labels=lrv.labels, kind="estimated"
    )


def simulate_driver_path(driver: GaussianDriver, draw_seed) -> np.ndarray:
    """One path of G on the grid: shape (F, m+1) with G(0) = 0.

    Increments are independent across grid steps; ``draw_seed`` feeds a fresh
    numpy Generator (ints or SeedSequence objects both work).
    """
    rng = np.random.default_rng(draw_seed)
    m = driver.grid.size
    nf = driver.n_features
    z = rng.standard_normal((m, nf))
    if driver.kind == "pivotal":
        inc = driver.factors[:, 0, 0][:, None] * z
    else:
        inc = np.einsum("kij,kj->ki", driver.factors, z)
    g = np.zeros((nf, m + 1), dtype=np.float64)
    g[:, 1:] = np.cumsum(inc, axis=0).T
    return g


def hmax_draw(path: np.ndarray) -> np.ndarray:
    """Running sup over features and sub-intervals of one driver path.

    hsup(u_j) = max over f, i <= j of |G(v_i, f) - (v_i/u_j) G(u_j, f)|;
    the result is its running maximum over j (length m).
    """
    path = np.asarray(path, dtype=np.float64)
    if path.ndim != 2:
        raise ValueError("path must have shape (F, m+1)")
    m = path.shape[1] - 1
    pos = np.arange(m + 1, dtype=np.float64)
    backend = get_backend()
    return backend.hmax_batch(np.ascontiguousarray(path[None]), pos)[0]


def _draw_seeds(seed: int, n_draws: int) -> list:
    # counter-based splitting: child k is a pure function of (seed, k)
    return [np.random.SeedSequence(seed, spawn_key=(k,)) for k in range(n_draws)]


def simulate_hmax_curves(driver: GaussianDriver) -> np.ndarray:
    """All Hmax curves for the driver's draw budget, shape (n_draws, m)."""
    m = driver.grid.size
    nf = driver.n_features
    paths = np.empty((driver.n_draws, nf, m + 1), dtype=np.float64)
    for k, child in enumerate(_draw_seeds(driver.seed, driver.n_draws)):
        paths[k] = simulate_driver_path(driver, child)
    pos = np.arange(m + 1, dtype=np.float64)
    backend = get_backend()
    return backend.hmax_batch(paths, pos)


def quantile_curve(driver: GaussianDriver, alpha: float) -> QuantileCurve:
    """Empirical (1-alpha)-quantile of the running-sup variable per grid point.

    A non-decreasing isotonic pass enforces the monotone-curve invariant;
    needs at least 100 draws.
    """
    if not 0 < alpha < 1:
        raise ValueError("alpha must lie in (0, 1)")
    if driver.n_draws < MIN_QUANTILE_DRAWS:
        raise ValueError(f"need at least {MIN_QUANTILE_DRAWS} draws, got {driver.n_draws}")
    curves = simulate_hmax_curves(driver)
    q = np.quantile(curves, 1.0 - alpha, axis=0)
    q = np.maximum.accumulate(q)
    if driver.grid.size > 1 and not np.all(q[1:] > 0):
        raise ValueError(
            "degenerate quantile curve (zero past the first grid point); "
            "check the input for constant features"
        )
    return QuantileCurve(grid=driver.grid, alpha=alpha, q=q, n_draws=driver.n_draws, seed=driver.seed)
