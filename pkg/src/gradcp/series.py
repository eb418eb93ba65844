"""Series representation, rescaled-time grids and prefix sums.

Observations are stored as a T x d matrix; row t (1-based in formulas)
corresponds to rescaled time t/T in (0, 1]. All grids are backed by integer
indices so that floor(u*T) at a grid point is computed by integer arithmetic,
never by a floating multiplication.
"""

from __future__ import annotations

import csv
import io
import os
from dataclasses import dataclass, field
from typing import TYPE_CHECKING

import numpy as np

from .errors import DataError
from .kernels import get_backend

if TYPE_CHECKING:
    from .features import FeatureFamily


@dataclass(frozen=True)
class SeriesSample:
    """An observed (possibly multivariate) series on the rescaled-time grid.

    Parameters
    ----------
    values : np.ndarray
        Float matrix of shape (T, d); row order is time order.
    origin : dict
        Optional metadata (source file, column names, transformations).
    """

    values: np.ndarray
    origin: dict = field(default_factory=dict, compare=False)

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2:
            raise DataError(f"series must be 1- or 2-dimensional, got ndim={values.ndim}")
        if values.shape[0] < 2:
            raise DataError(f"T < 2: need at least two observations, got T={values.shape[0]}")
        if values.shape[1] < 1:
            raise DataError("d < 1: need at least one column")
        if not np.all(np.isfinite(values)):
            t, j = np.argwhere(~np.isfinite(values))[0]
            raise DataError(f"non-finite value at row {t + 1}, column {j + 1}")
        values = np.ascontiguousarray(values)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def n_obs(self) -> int:
        """Number of observations T."""
        return self.values.shape[0]

    @property
    def dim(self) -> int:
        """Cross-sectional dimension d."""
        return self.values.shape[1]

    def reversed(self) -> "SeriesSample":
        """Time-reversed copy (row order flipped)."""
        origin = dict(self.origin)
        origin["reversed"] = not origin.get("reversed", False)
        return SeriesSample(self.values[::-1].copy(), origin)


@dataclass(frozen=True)
class RescaledGrid:
    """Strictly increasing grid points in (0, 1], stored as indices/denom.

    ``points[k] = indices[k] / denom`` exactly; keeping the integer indices
    makes floor(u*T) free of floating-point floor ambiguity.
    """

    indices: np.ndarray
    denom: int

    def __post_init__(self) -> None:
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.ndim != 1 or idx.size == 0:
            raise ValueError("grid needs at least one point")
        if idx[0] < 1 or idx[-1] > self.denom:
            raise ValueError("grid indices must lie in 1..denom (points in (0,1])")
        if np.any(np.diff(idx) <= 0):
            raise ValueError("grid points must be strictly increasing")
        idx.setflags(write=False)
        object.__setattr__(self, "indices", idx)

    @classmethod
    def natural(cls, n: int) -> "RescaledGrid":
        """The full grid {1/n, 2/n, ..., 1}."""
        if n < 1:
            raise ValueError("n must be positive")
        return cls(np.arange(1, n + 1, dtype=np.int64), n)

    @classmethod
    def equispaced(cls, m: int) -> "RescaledGrid":
        """m equispaced points {1/m, ..., 1} (simulation grids)."""
        return cls.natural(m)

    @classmethod
    def from_points(cls, points: np.ndarray, denom: int) -> "RescaledGrid":
        """Build from float points that must sit on the {j/denom} lattice."""
        pts = np.asarray(points, dtype=np.float64)
        idx = np.rint(pts * denom).astype(np.int64)
        if np.any(np.abs(idx - pts * denom) > 1e-9):
            raise ValueError("grid points are not multiples of 1/denom")
        return cls(idx, denom)

    @property
    def points(self) -> np.ndarray:
        return self.indices / float(self.denom)

    @property
    def size(self) -> int:
        return int(self.indices.size)

    def spans_full_range(self) -> bool:
        """True when the last point equals 1 (full-span detection)."""
        return int(self.indices[-1]) == self.denom


@dataclass(frozen=True)
class PrefixSums:
    """Compensated cumulative sums S_f(t) = sum_{s<=t} f(X_s), one row per feature.

    ``sums`` has shape (F, n+1) with S_f(0) = 0; ``n`` is the series length
    that also provides the 1/T normalization of the CUSUM statistics.
    """

    labels: tuple[str, ...]
    sums: np.ndarray
    n: int

    def __post_init__(self) -> None:
        sums = np.asarray(self.sums, dtype=np.float64)
        if sums.ndim != 2 or sums.shape != (len(self.labels), self.n + 1):
            raise ValueError("sums must have shape (n_features, n+1)")
        sums.setflags(write=False)
        object.__setattr__(self, "sums", sums)

    def index_of(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise KeyError(f"unknown feature label {label!r}") from None


def build_prefix_sums(sample: SeriesSample, family: "FeatureFamily") -> PrefixSums:
    """Evaluate every feature of ``family`` and accumulate compensated prefix sums.

    Raises
    ------
    ValueError
        If the family's required dimension does not match the sample.
    """
    fx = family.evaluate(sample.values)  # (F, n)
    backend = get_backend()
    n = fx.shape[1]
    sums = np.empty((fx.shape[0], n + 1), dtype=np.float64)
    for k in range(fx.shape[0]):
        sums[k] = backend.prefix_sums(np.ascontiguousarray(fx[k]))
    return PrefixSums(labels=family.labels, sums=sums, n=n)


def _decode(source) -> io.TextIOBase:
    if isinstance(source, (str, os.PathLike)):
        return open(source, "r", encoding="utf-8", newline="")
    if isinstance(source, bytes):
        return io.StringIO(source.decode("utf-8"))
    if isinstance(source, io.TextIOBase):
        return source
    # binary stream
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    return io.StringIO(data)


def load_series(source, *, delimiter: str = ",", header: str = "auto") -> SeriesSample:
    """Parse a CSV stream into a SeriesSample.

    Parameters
    ----------
    source : path, bytes or stream
        UTF-8 CSV, one column per series dimension, row order = time order.
    delimiter : str
        Field separator, defaults to comma.
    header : {"auto", "yes", "no"}
        "auto" treats a non-numeric first row as column names.

    Raises
    ------
    DataError
        On parse failure, non-numeric cells, inconsistent width, NaN/Inf
        values or fewer than two rows.
    """
    if header not in ("auto", "yes", "no"):
        raise ValueError("header must be one of 'auto', 'yes', 'no'")
    stream = _decode(source)
    close = isinstance(source, (str, os.PathLike))
    try:
        reader = csv.reader(stream, delimiter=delimiter)
        rows = [row for row in reader if row and any(cell.strip() for cell in row)]
    finally:
        if close:
            stream.close()

    columns: list[str] | None = None
    if rows:
        first = [cell.strip() for cell in rows[0]]
        first_numeric = True
        for cell in first:
            try:
                float(cell)
            except ValueError:
                first_numeric = False
                break
        if header == "yes" or (header == "auto" and not first_numeric):
            columns = first
            rows = rows[1:]

    if len(rows) < 2:
        raise DataError(f"T < 2: need at least two data rows, got {len(rows)}")

    width = len(rows[0])
    out = np.empty((len(rows), width), dtype=np.float64)
    for r, row in enumerate(rows):
        if len(row) != width:
            raise DataError(f"inconsistent width at row {r + 1}: expected {width} columns, got {len(row)}")
        for c, cell in enumerate(row):
            try:
                out[r, c] = float(cell)
            except ValueError:
                raise DataError(f"non-numeric cell at row {r + 1}, column {c + 1}: {cell.strip()!r}") from None
    if not np.all(np.isfinite(out)):
        t, j = np.argwhere(~np.isfinite(out))[0]
        raise DataError(f"non-finite value at row {t + 1}, column {j + 1}")

    origin: dict = {}
    if isinstance(source, (str, os.PathLike)):
        origin["source"] = str(source)
    if columns is not None:
        origin["columns"] = columns
    return SeriesSample(out, origin)
