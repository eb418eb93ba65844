"""The empirical measure of time-variation and its suprema.

For a feature f and grid indices i <= j (rescaled times v = i/T, u = j/T) the
CUSUM contrast is

    dhat(j, i, f) = S_f(i)/T - (i/j) * (S_f(j)/T),

where S_f are prefix sums. The profile ``dsup[j]`` maximizes |dhat| over all
features and i <= j; ``dmax`` is its running maximum. Two scan methods are
available: ``brute`` (the oracle, O(T^2)) and ``hull`` (convex-hull slope
queries, O(T log T)); they agree within 1e-10 and brute is the default up to
T = 1024.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, replace

import numpy as np

from .features import FeatureFamily
from .kernels import get_backend
from .series import PrefixSums, RescaledGrid

BRUTE_DEFAULT_MAX = 1024


@dataclass(frozen=True)
class TimeVariationSurface:
    """dsup/dmax profile over a grid, with per-point argmax bookkeeping.

    ``argmax_index[k]`` is the inner index i attaining dsup at grid point k
    (v* = i/n); ``argmax_feature[k]`` indexes ``labels``. ``scaled_by`` is the
    sigma used by scale_surface (1.0 when raw).
    """

    grid: RescaledGrid
    dsup: np.ndarray
    dmax: np.ndarray
    argmax_index: np.ndarray
    argmax_feature: np.ndarray
    labels: tuple[str, ...]
    n: int
    scaled_by: float = 1.0

    def __post_init__(self) -> None:
        for name in ("dsup", "dmax", "argmax_index", "argmax_feature"):
            arr = np.asarray(getattr(self, name))
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.dsup.shape != (self.grid.size,):
            raise ValueError("dsup length must match the grid")
        if np.any(self.dsup < 0):
            raise ValueError("dsup must be non-negative")

    @property
    def argmax_v(self) -> np.ndarray:
        return self.argmax_index / float(self.n)

    @property
    def argmax_label(self) -> list[str]:
        return [self.labels[k] for k in self.argmax_feature]

    def rows(self):
        """Iterate CSV rows (u, dsup, dmax, argmax_v, argmax_f)."""
        pts = self.grid.points
        av = self.argmax_v
        for k in range(self.grid.size):
            yield (pts[k], self.dsup[k], self.dmax[k], av[k], self.labels[self.argmax_feature[k]])

    def write_csv(self, path, comment: str | None = None) -> None:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            if comment:
                fh.write(f"# {comment}\n")
            writer = csv.writer(fh)
            writer.writerow(["u", "dsup", "dmax", "argmax_v", "argmax_f"])
            for u, ds, dm, av, af in self.rows():
                writer.writerow([repr(float(u)), repr(float(ds)), repr(float(dm)), repr(float(av)), af])


def dhat(prefix: PrefixSums, f: str | int, j: int, i: int) -> float:
    """The CUSUM contrast at integer grid indices (u = j/n, v = i/n).

    The weight i/j is an exact float division of integers; i = 0 gives 0
    (empty sum, zero weight).
    """
    if j == 0:
        raise ValueError("j = 0: the contrast is undefined at u = 0")
    if not 0 <= i <= j <= prefix.n:
        raise ValueError(f"need 0 <= i <= j <= n, got i={i}, j={j}, n={prefix.n}")
    k = prefix.index_of(f) if isinstance(f, str) else int(f)
    s = prefix.sums[k]
    n = float(prefix.n)
    return float(s[i] / n - (i / j) * (s[j] / n))


def dsup_profile(
    prefix: PrefixSums,
    family: FeatureFamily,
    grid: RescaledGrid | None = None,
    method: str = "auto",
) -> TimeVariationSurface:
    """Scan the |dhat| suprema over all features and sub-intervals.

    Parameters
    ----------
    prefix : PrefixSums
        Prefix sums of the family applied to the sample.
    family : FeatureFamily
        Supplies labels and ordering (must match ``prefix``).
    grid : RescaledGrid, optional
        Evaluation points; defaults to the full natural grid {1/n, ..., 1}.
        The inner supremum over v always runs over the natural grid.
    method : {"auto", "brute", "hull"}
        "auto" picks brute for n <= 1024, hull beyond.
    """
    if family.labels != prefix.labels:
        raise ValueError("family does not match the prefix sums")
    n = prefix.n
    if grid is None:
        grid = RescaledGrid.natural(n)
    elif grid.denom != n:
        raise ValueError(f"grid denominator {grid.denom} does not match series length {n}")
    if method == "auto":
        method = "brute" if n <= BRUTE_DEFAULT_MAX else "hull"
    if method not in ("brute", "hull"):
        raise ValueError(f"unknown method {method!r}")

    backend = get_backend()
    scan = backend.sup_scan_brute if method == "brute" else backend.sup_scan_hull
    pos = np.arange(n + 1, dtype=np.float64)
    eval_idx = np.ascontiguousarray(grid.indices)
    inv_n = 1.0 / n

    k = grid.size
    dsup = np.full(k, -1.0)
    argi = np.zeros(k, dtype=np.int64)
    argf = np.zeros(k, dtype=np.int64)
    for f in range(family.size):
        sn = np.ascontiguousarray(prefix.sums[f] * inv_n)
        vals, idx = scan(sn, pos, eval_idx)
        better = vals > dsup
        tie = (vals == dsup) & (idx < argi)
        take = better | tie
        dsup[take] = vals[take]
        argi[take] = idx[take]
        argf[take] = f
    dmax = np.maximum.accumulate(dsup)
    return TimeVariationSurface(
        grid=grid,
        dsup=dsup,
        dmax=dmax,
        argmax_index=argi,
        argmax_feature=argf,
        labels=family.labels,
        n=n,
    )


def scale_surface(surface: TimeVariationSurface, sigma_hat: float) -> TimeVariationSurface:
    """Divide the profile by a positive scale estimate (sigma-normalization)."""
    if not np.isfinite(sigma_hat) or sigma_hat <= 0:
        raise ValueError(f"sigma_hat must be a positive finite number, got {sigma_hat}")
    return replace(
        surface,
        dsup=surface.dsup / sigma_hat,
        dmax=surface.dmax / sigma_hat,
        scaled_by=surface.scaled_by * sigma_hat,
    )
