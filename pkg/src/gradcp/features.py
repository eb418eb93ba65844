"""Finite families of moment functions identifying the feature under watch.

A family is a finite, ordered set of functions f: R^d -> R whose moments
E[f(X)] jointly determine the feature. Covered kinds:

- mean: the identity on a univariate series,
- variance: x -> x^2 on a univariate series (raw second moment),
- acf:p (autocovariance up to lag p): f_l(x) = x_0 * x_l on the lag-embedded
  (p+1)-dimensional series,
- cov (cross-covariance): f_ij(x) = x_i * x_j for i <= j on a d-dimensional
  series.

Second-moment families use raw (uncentered) moments; callers that want
centred variables can pre-center the sample (see detector.DetectionConfig).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .series import SeriesSample

FAMILY_KINDS = ("mean", "variance", "acf", "cov")


@dataclass(frozen=True)
class Feature:
    """A single moment function: the product of two coordinates (or identity)."""

    label: str
    i: int
    j: int  # j == -1 encodes the identity on coordinate i

    def __call__(self, x) -> float:
        x = np.asarray(x, dtype=np.float64).ravel()
        if self.j < 0:
            return float(x[self.i])
        return float(x[self.i] * x[self.j])


@dataclass(frozen=True)
class FeatureFamily:
    """Ordered family of moment functions with stable labels."""

    kind: str
    features: tuple[Feature, ...]
    required_dim: int
    embedding_lag: int = 0

    def __post_init__(self) -> None:
        if self.kind not in FAMILY_KINDS:
            raise ValueError(f"unknown family kind {self.kind!r}")
        if not self.features:
            raise ValueError("family must contain at least one function")
        labels = [f.label for f in self.features]
        if len(set(labels)) != len(labels):
            raise ValueError("feature labels must be unique within a family")

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(f.label for f in self.features)

    @property
    def size(self) -> int:
        return len(self.features)

    def evaluate(self, values: np.ndarray) -> np.ndarray:
        """Apply every feature to the rows of ``values``; returns (F, n)."""
        values = np.asarray(values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.shape[1] != self.required_dim:
            raise ValueError(
                f"{self.kind} family needs dimension {self.required_dim}, got d={values.shape[1]}"
            )
        out = np.empty((self.size, values.shape[0]), dtype=np.float64)
        for k, f in enumerate(self.features):
            if f.j < 0:
                out[k] = values[:, f.i]
            else:
                out[k] = values[:, f.i] * values[:, f.j]
        return out


def make_family(kind: str, p: int | None = None, d: int = 1) -> FeatureFamily:
    """Construct the family for a feature kind.

    Parameters
    ----------
    kind : {"mean", "variance", "acf", "cov"}
    p : int, optional
        Autocovariance lag order (acf only).
    d : int
        Series dimension the family will be applied to (cov only; a cov family
        with d < 2 degenerates to the single variance function).
    """
    if kind == "mean":
        return FeatureFamily("mean", (Feature("id", 0, -1),), required_dim=1)
    if kind == "variance":
        return FeatureFamily("variance", (Feature("x2", 0, 0),), required_dim=1)
    if kind == "acf":
        if p is None or p < 0:
            raise ValueError("acf family needs a non-negative lag order p")
        feats = tuple(Feature(f"f{l}", 0, l) for l in range(p + 1))
        return FeatureFamily("acf", feats, required_dim=p + 1, embedding_lag=p)
    if kind == "cov":
        if d < 1:
            raise ValueError("cov family needs d >= 1")
        if d < 2:
            return FeatureFamily("cov", (Feature("f11", 0, 0),), required_dim=1)
        feats = tuple(
            Feature(f"f{i + 1}{j + 1}", i, j) for i in range(d) for j in range(i, d)
        )
        return FeatureFamily("cov", feats, required_dim=d)
    raise ValueError(f"unknown family kind {kind!r}")


def parse_family_token(token: str, d: int = 1) -> FeatureFamily:
    """Parse a CLI token: ``mean | variance | acf:<p> | cov``."""
    token = token.strip().lower()
    if token.startswith("acf:"):
        try:
            p = int(token.split(":", 1)[1])
        except ValueError:
            raise ValueError(f"bad acf token {token!r}: expected acf:<p>") from None
        return make_family("acf", p=p)
    if token in ("mean", "variance", "cov"):
        return make_family(token, d=d)
    raise ValueError(f"unknown feature token {token!r} (use mean | variance | acf:<p> | cov)")


def embed_lags(sample: SeriesSample, p: int) -> SeriesSample:
    """Lag-embed a univariate series into its (p+1)-dimensional history.

    Row t of the result is (Y_{t+p}, Y_{t+p-1}, ..., Y_t); the result has
    length T - p. Detection on the embedded series runs on its own rescaled
    time; embedded index t maps back to original rescaled time (t+p)/T.

    Raises
    ------
    ValueError
        If the sample is multivariate or T <= p.
    """
    if sample.dim != 1:
        raise ValueError("lag embedding needs a univariate series")
    if p < 0:
        raise ValueError("lag order must be non-negative")
    n = sample.n_obs
    if n - p < 2:
        raise ValueError(f"lag order p={p} too large for series of length T={n}")
    y = sample.values[:, 0]
    if p == 0:
        return SeriesSample(y[:, None].copy(), dict(sample.origin))
    out = np.empty((n - p, p + 1), dtype=np.float64)
    for l in range(p + 1):
        out[:, l] = y[p - l : n - l]
    origin = dict(sample.origin)
    origin["embedding_lag"] = p
    return SeriesSample(out, origin)
