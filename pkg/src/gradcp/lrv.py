"""Long-run (co)variance estimation.

Provides the kernel-weighted HAC estimator

    sigma2(u, f, f') = sum_l K(l/b) Gamma_l(u, f, f'),
    Gamma_l(u, f, f') = (1/T) sum_t Z_t(f) Z_{t-l}(f'),

with Z the centred feature series (Nadaraya-Watson, global-mean or no
centering), plus the residual-based long-run variance for the location model
and the first-difference variance estimator for i.i.d. errors. The lag sum
runs over both signs; lags whose kernel weight is zero are skipped, so
bandwidth b keeps lags |l| < b (b = 10 weights lags 1..9 plus lag 0 under
Bartlett). Gamma_l(u) keeps only index pairs with both t and t-l inside the
observed window 1..floor(uT) -- this makes the Bartlett sum a quadratic form
(non-negative at every u) and keeps data past floor(uT) out of sigma2(u) --
and the 1/T normalization is never rescaled for edge truncation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .features import FeatureFamily
from .series import RescaledGrid, SeriesSample

SMOOTHING_KERNELS = ("epanechnikov", "uniform", "gaussian")


@dataclass(frozen=True)
class KernelSpec:
    """HAC lag window: Bartlett (triangular) or flat-top.

    bandwidth = 0 means lag 0 only (weight K(0) = 1, all other lags zero).
    """

    kind: str = "bartlett"
    bandwidth: float = 10.0

    def __post_init__(self) -> None:
        if self.kind not in ("bartlett", "flattop"):
            raise ValueError(f"unknown HAC kernel {self.kind!r}")
        if not np.isfinite(self.bandwidth) or self.bandwidth < 0:
            raise ValueError("bandwidth must be a non-negative finite number")

    def weight(self, x: float) -> float:
        ax = abs(x)
        if self.kind == "bartlett":
            return max(0.0, 1.0 - ax)
        if ax <= 0.5:
            return 1.0
        if ax < 1.0:
            return 2.0 * (1.0 - ax)
        return 0.0

    @property
    def max_lag(self) -> int:
        """Largest lag with a non-zero weight (both kernels vanish at |x| >= 1)."""
        if self.bandwidth == 0:
            return 0
        return max(0, math.ceil(self.bandwidth) - 1)


@dataclass(frozen=True)
class LongRunCovariance:
    """sigma2(u, f, f') on a grid: one symmetric (F, F) matrix per grid point."""

    grid: RescaledGrid
    labels: tuple[str, ...]
    sigma: np.ndarray  # (grid.size, F, F)
    centering: str

    def __post_init__(self) -> None:
        sig = np.asarray(self.sigma, dtype=np.float64)
        nf = len(self.labels)
        if sig.shape != (self.grid.size, nf, nf):
            raise ValueError("sigma must have shape (grid size, F, F)")
        sig.setflags(write=False)
        object.__setattr__(self, "sigma", sig)

    def at_indices(self, indices: np.ndarray) -> np.ndarray:
        """Matrices at a subset of this grid's integer indices."""
        lookup = {int(j): k for k, j in enumerate(self.grid.indices)}
        try:
            sel = [lookup[int(j)] for j in indices]
        except KeyError as exc:
            raise ValueError(f"grid index {exc} not covered by this covariance grid") from None
        return self.sigma[sel]


def _smooth_window(n: int, h: float, kernel: str) -> np.ndarray:
    if not 0 < h < 1:
        raise ValueError(f"smoothing bandwidth must satisfy 0 < h < 1, got {h}")
    if kernel not in SMOOTHING_KERNELS:
        raise ValueError(f"unknown smoothing kernel {kernel!r}")
    nh = n * h
    if kernel == "gaussian":
        half = min(n - 1, int(math.ceil(4.0 * nh)))  # truncated at 4 bandwidths
    else:
        half = min(n - 1, int(math.ceil(nh)))
    x = np.arange(-half, half + 1, dtype=np.float64) / nh
    if kernel == "epanechnikov":
        w = 0.75 * np.maximum(0.0, 1.0 - x * x)
    elif kernel == "uniform":
        w = np.where(np.abs(x) <= 1.0, 0.5, 0.0)
    else:
        w = np.exp(-0.5 * x * x)
    return w


def _nw_smooth(y: np.ndarray, h: float, kernel: str = "epanechnikov") -> np.ndarray:
    """Self-normalized Nadaraya-Watson fit of y on the index grid."""
    y = np.asarray(y, dtype=np.float64)
    n = y.shape[0]
    w = _smooth_window(n, h, kernel)
    half = (w.shape[0] - 1) // 2
    # slice the full convolution: mode="same" misbehaves when the window is
    # longer than the series
    num = np.convolve(y, w, mode="full")[half : half + n]
    den = np.convolve(np.ones(n), w, mode="full")[half : half + n]
    if np.any(den <= 0):
        raise ValueError("degenerate smoothing weights: increase h (all-zero weight row)")
    return num / den


def nw_mean(
    sample: SeriesSample,
    f,
    h: float,
    kernel: str = "epanechnikov",
) -> np.ndarray:
    """Nadaraya-Watson estimate of t -> E[f(X_{t,T})] on the sample grid.

    The ratio (self-normalized) form is used, so constants are reproduced and
    boundaries handled without an explicit h^{-1} factor.

    Parameters
    ----------
    sample : SeriesSample
    f : Feature or callable applied row-wise, or None for the identity
        (univariate samples).
    h : float
        Bandwidth in rescaled time, 0 < h < 1.
    kernel : {"epanechnikov", "uniform", "gaussian"}
    """
    if f is None:
        if sample.dim != 1:
            raise ValueError("identity feature needs a univariate sample")
        y = sample.values[:, 0]
    else:
        y = np.asarray([f(row) for row in sample.values], dtype=np.float64)
    return _nw_smooth(y, h, kernel)


def _center_features(
    fx: np.ndarray, centering: str, h: float, smooth_kernel: str
) -> np.ndarray:
    if centering == "none":
        return fx.copy()
    if centering == "global":
        return fx - fx.mean(axis=1, keepdims=True)
    if centering == "nw":
        out = np.empty_like(fx)
        for k in range(fx.shape[0]):
            out[k] = fx[k] - _nw_smooth(fx[k], h, smooth_kernel)
        return out
    raise ValueError(f"unknown centering {centering!r} (use nw | global | none)")


def _hac_from_z(z: np.ndarray, kernel: KernelSpec, eval_idx: np.ndarray) -> np.ndarray:
    """Sigma matrices at eval indices from centred feature rows z (F, n)."""
    nf, n = z.shape
    lmax = kernel.max_lag
    if lmax >= n:
        raise ValueError(f"HAC bandwidth {kernel.bandwidth} too large for series of length {n}")
    sig = np.zeros((eval_idx.shape[0], nf, nf), dtype=np.float64)
    for lag in range(-lmax, lmax + 1):
        w = 1.0 if lag == 0 else kernel.weight(lag / kernel.bandwidth)
        if w == 0.0:
            continue
        # products Z_t(f) Z_{t-lag}(g); at evaluation point u both indices
        # must lie inside the observed window 1..floor(uT), which keeps the
        # Bartlett sum a quadratic form (non-negative) at every u
        if lag >= 0:
            a = z[:, lag:]  # t = lag+1 .. n  (1-based)
            b = z[:, : n - lag]
        else:
            a = z[:, : n + lag]  # t = 1 .. n+lag
            b = z[:, -lag:]
        prod = np.einsum("ft,gt->fgt", a, b)
        csum = np.cumsum(prod, axis=2)
        for e, j in enumerate(eval_idx):
            top = int(j) - abs(lag)  # pairs fully inside the window
            if top > 0:
                sig[e] += w * csum[:, :, top - 1]
    sig /= n
    # exact symmetrization
    sig = 0.5 * (sig + np.transpose(sig, (0, 2, 1)))
    return sig


def hac_sigma(
    sample: SeriesSample,
    family: FeatureFamily,
    kernel: KernelSpec,
    centering: str = "nw",
    grid: RescaledGrid | None = None,
    h: float = 0.2,
    smooth_kernel: str = "epanechnikov",
) -> LongRunCovariance:
    """HAC long-run covariance of the family's moment series, cumulative in u.

    Parameters
    ----------
    sample : SeriesSample
    family : FeatureFamily
        Evaluated on the sample; one row of Z per feature.
    kernel : KernelSpec
        Lag window and bandwidth b.
    centering : {"nw", "global", "none"}
        How E[f(X_t)] is estimated when forming Z_t(f).
    grid : RescaledGrid, optional
        Evaluation grid; defaults to the natural grid of the sample.
    h : float
        Nadaraya-Watson bandwidth (centering="nw" only).
    """
    fx = family.evaluate(sample.values)
    n = fx.shape[1]
    if grid is None:
        grid = RescaledGrid.natural(n)
    elif grid.denom != n:
        raise ValueError(f"grid denominator {grid.denom} does not match series length {n}")
    z = _center_features(fx, centering, h, smooth_kernel)
    sig = _hac_from_z(z, kernel, grid.indices)
    return LongRunCovariance(grid=grid, labels=family.labels, sigma=sig, centering=centering)


def _absorption_factor(n: int, h: float, kernel: KernelSpec, smooth_kernel: str) -> float:
    """First-order long-run mass absorbed by the smoother.

    Residuals (I - W) eps lose part of the error process to the fit; under
    gamma-concentration the HAC quadratic form loses the multiplicative share

        c = (1/n) sum_{|t-s|<b} K((t-s)/b) [W + W^T - W W^T]_{ts},

    the lag-window analogue of the effective-degrees-of-freedom correction
    for residual variances. Computed exactly (boundary rows included) via
    banded convolutions; W never materializes.
    """
    w = _smooth_window(n, h, smooth_kernel)
    half = (w.shape[0] - 1) // 2
    den = np.convolve(np.ones(n), w, mode="full")[half : half + n]
    inv_den = 1.0 / den
    lmax = kernel.max_lag
    hl = half + lmax
    ext = np.zeros(2 * hl + 1)
    ext[lmax : lmax + 2 * half + 1] = w  # ext[hl + j] = kappa(j)
    ones = np.ones(n)
    total = 0.0
    for d in range(-lmax, lmax + 1):
        kb = 1.0 if d == 0 else kernel.weight(d / kernel.bandwidth)
        if kb == 0.0:
            continue
        kd = ext[hl + d]
        # p_d(j) = kappa(j) * kappa(j - d); c_d(t) = sum_u p_d(t - u)
        p = np.zeros(2 * hl + 1)
        if d >= 0:
            p[d:] = ext[d:] * ext[: ext.shape[0] - d]
        else:
            p[:d] = ext[:d] * ext[-d:]
        c_d = np.convolve(ones, p, mode="full")[hl : hl + n]
        lo = max(0, d)  # 0-based t with both t and t-d inside the sample
        hi = n + min(0, d)
        a = inv_den[lo:hi]
        b_ = inv_den[lo - d : hi - d]
        term = kd * (a + b_) - c_d[lo:hi] * a * b_
        total += kb * float(np.sum(term))
    return total / n


def residual_lrv(
    sample: SeriesSample,
    h: float = 0.2,
    kernel: KernelSpec = KernelSpec("bartlett", 10.0),
    smooth_kernel: str = "epanechnikov",
    absorption_correction: bool = True,
) -> float:
    """Long-run variance of the location-model errors from smoothing residuals.

    Fits a Nadaraya-Watson mean, applies the HAC estimator at u = 1 to the
    residuals and returns sigma^2 > 0. By default the estimate is divided by
    (1 - c) where c is the long-run mass the smoother absorbs from the
    errors (see :func:`_absorption_factor`); without it the estimate is
    biased low by roughly (2 K(0) - R(K)) * b / (T h) and the scaled
    statistic over-rejects in small samples.

    Raises
    ------
    ValueError
        If the estimate is not strictly positive (degenerate residuals, or a
        flat-top window gone negative: use a larger b or the Bartlett kernel,
        which is non-negative by construction), or if the absorption share
        reaches 1/2 (h too small relative to the HAC bandwidth).
    """
    if sample.dim != 1:
        raise ValueError("residual_lrv needs a univariate sample")
    y = sample.values[:, 0]
    resid = y - _nw_smooth(y, h, smooth_kernel)
    data_scale = float(np.sqrt(np.mean(y * y)))
    if float(np.max(np.abs(resid))) <= 1e-12 * max(data_scale, 1e-300):
        raise ValueError("degenerate residuals: series is constant up to rounding (zero variance)")
    n = resid.shape[0]
    sig = _hac_from_z(resid[None, :], kernel, np.array([n], dtype=np.int64))
    sigma2 = float(sig[0, 0, 0])
    if sigma2 <= 0:
        raise ValueError(
            "non-positive long-run variance estimate; increase the bandwidth or "
            "use the Bartlett kernel (non-negative by construction)"
        )
    if absorption_correction:
        c = _absorption_factor(n, h, kernel, smooth_kernel)
        if c >= 0.5:
            raise ValueError(
                f"smoother absorbs {c:.2f} of the long-run variance; "
                "increase h or reduce the HAC bandwidth"
            )
        sigma2 /= 1.0 - c
    return sigma2


def diff_variance(sample: SeriesSample) -> float:
    """First-difference variance estimator (1/T) sum_{t>=2} (X_t - X_{t-1})^2 / 2.

    Suitable when errors are i.i.d. and the mean varies smoothly; returns 0 on
    a constant series (callers must treat 0 as degenerate).
    """
    if sample.dim != 1:
        raise ValueError("diff_variance needs a univariate sample")
    y = sample.values[:, 0]
    d = np.diff(y)
    return float(np.sum(d * d) / (2.0 * y.shape[0]))
