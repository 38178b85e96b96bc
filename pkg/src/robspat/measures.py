"""Spatial lags, robust scale, and the eight spatial correlation statistics.

Every statistic has a batched implementation working on a ``(b, n)`` stack
of fields, which is what permutation tests and influence curves use. The
scalar entry points raise on undefined statistics; the batched ones return
NaN instead so a caller can redraw the offending rows.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, DimensionError, ZeroScaleError, ZeroVarianceError
from .lattice import WeightMatrix

__all__ = [
    "Centering",
    "Field",
    "MeasureKind",
    "ScaleEstimator",
    "center",
    "spatial_lag",
    "robust_spatial_lag",
    "weighted_median",
    "mad",
    "spatial_autocov",
    "compute_measure",
    "statistics",
    "ALL_KINDS",
]

# Cumulative weight counts as "exactly one half" within this tolerance.
MEDIAN_TIE_TOL = 1e-12


class Centering(str, enum.Enum):
    MEAN = "mean"
    MEDIAN = "median"
    NONE = "none"

    @classmethod
    def parse(cls, value: str | Centering) -> Centering:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataError(f"unknown centering {value!r}") from None


class MeasureKind(str, enum.Enum):
    MC = "MC"
    GC = "GC"
    APLE = "APLE"
    RMC = "RMC"
    RGC = "RGC"
    RAPLE = "RAPLE"
    GK = "GK"
    GK2 = "GK2"

    @classmethod
    def parse(cls, value: str | MeasureKind) -> MeasureKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().upper())
        except ValueError:
            raise DataError(f"unknown measure {value!r}; expected one of {[k.value for k in cls]}") from None

    @classmethod
    def parse_list(cls, text: str | Iterable[str | MeasureKind]) -> list[MeasureKind]:
        items = text.split(",") if isinstance(text, str) else list(text)
        return [cls.parse(item) for item in items if str(item).strip()]

    @property
    def orientation(self) -> int:
        """+1 if larger values mean stronger positive autocorrelation, -1 for the Geary pair."""
        return -1 if self in (MeasureKind.GC, MeasureKind.RGC) else 1

    @property
    def uses_robust_lag(self) -> bool:
        return self in (MeasureKind.RMC, MeasureKind.RAPLE, MeasureKind.GK2)


ALL_KINDS: tuple[MeasureKind, ...] = tuple(MeasureKind)


class ScaleEstimator(str, enum.Enum):
    MAD = "mad"
    STDDEV = "stddev"


@dataclass(frozen=True, eq=False)
class Field:
    """Observations at each location plus how they were centered."""

    values: np.ndarray
    centering: Centering = Centering.NONE

    def __post_init__(self) -> None:
        v = np.array(self.values, dtype=float)
        if v.ndim != 1:
            raise DataError(f"a field must be one-dimensional, got shape {v.shape}")
        v.setflags(write=False)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "centering", Centering.parse(self.centering))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    def __len__(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _values(z: Field | np.ndarray | Sequence[float]) -> np.ndarray:
    return z.values if isinstance(z, Field) else np.asarray(z, dtype=float)


def center(z: Field | np.ndarray | Sequence[float], mode: str | Centering = Centering.MEAN) -> Field:
    """Subtract the mean or the median.

    A constant input centers to an exact zero vector rather than rounding
    residue; downstream measures reject it as zero-variance.
    """
    x = np.array(_values(z), dtype=float)
    mode = Centering.parse(mode)
    if x.ndim != 1 or x.size < 2:
        raise DataError(f"need a vector of at least 2 observations, got shape {x.shape}")
    if np.ptp(x) == 0:
        return Field(np.zeros_like(x), mode)
    if mode is Centering.MEAN:
        x = x - x.mean()
    elif mode is Centering.MEDIAN:
        x = x - np.median(x)
    return Field(x, mode)


def _check_dims(W: WeightMatrix, n: int) -> None:
    if n != W.n:
        raise DimensionError(f"field has {n} values but the weight matrix has {W.n} locations")


def _as_batch(W: WeightMatrix, Z) -> np.ndarray:
    Z = np.atleast_2d(np.asarray(_values(Z) if isinstance(Z, Field) else Z, dtype=float))
    _check_dims(W, Z.shape[-1])
    return Z


def _lag(W: WeightMatrix, Z: np.ndarray) -> np.ndarray:
    return np.asarray((W.matrix @ Z.T).T)


def _weighted_median_rows(vals: np.ndarray, wts: np.ndarray) -> np.ndarray:
    """Weighted median along the last axis (weights broadcast against vals)."""
    order = np.argsort(vals, axis=-1, kind="stable")
    s = np.take_along_axis(vals, order, axis=-1)
    w = np.take_along_axis(np.broadcast_to(wts, vals.shape), order, axis=-1)
    cum = np.cumsum(w, axis=-1)
    k = vals.shape[-1]
    first = np.argmax(cum >= 0.5 - MEDIAN_TIE_TOL, axis=-1)[..., None]
    v = np.take_along_axis(s, first, axis=-1)
    c = np.take_along_axis(cum, first, axis=-1)
    nxt = np.take_along_axis(s, np.minimum(first + 1, k - 1), axis=-1)
    tie = (np.abs(c - 0.5) <= MEDIAN_TIE_TOL) & (first + 1 < k) & (nxt != v)
    return np.where(tie, 0.5 * (v + nxt), v)[..., 0]


def _robust_lag(W: WeightMatrix, Z: np.ndarray) -> np.ndarray:
    idx, wts = W.padded
    padded = np.concatenate([Z, np.full(Z.shape[:-1] + (1,), np.inf)], axis=-1)
    return _weighted_median_rows(padded[..., idx], wts)


def _mad_rows(X: np.ndarray) -> np.ndarray:
    med = np.median(X, axis=-1, keepdims=True)
    return np.median(np.abs(X - med), axis=-1)


def spatial_lag(W: WeightMatrix, z) -> np.ndarray:
    """Neighbor average ``W z`` for one field (or a stack of fields)."""
    Z = _as_batch(W, z)
    out = _lag(W, Z)
    return out[0] if np.ndim(_values(z) if isinstance(z, Field) else z) == 1 else out


def robust_spatial_lag(W: WeightMatrix, z) -> np.ndarray:
    """Weighted median of each location's neighbors."""
    Z = _as_batch(W, z)
    out = _robust_lag(W, Z)
    return out[0] if np.ndim(_values(z) if isinstance(z, Field) else z) == 1 else out


def weighted_median(values: Sequence[float], weights: Sequence[float]) -> float:
    """Smallest value whose cumulative weight reaches one half.

    When the cumulative weight equals exactly one half at some value, the
    midpoint between it and the next distinct value is returned, which
    reproduces the usual even-count median for equal weights.
    """
    v = np.asarray(values, dtype=float)
    w = np.asarray(weights, dtype=float)
    if v.size == 0:
        raise DataError("weighted median of an empty sequence")
    if v.shape != w.shape or v.ndim != 1:
        raise DataError("values and weights must be 1-d sequences of equal length")
    if np.any(w <= 0) or abs(w.sum() - 1.0) > 1e-9:
        raise DataError("weights must be positive and sum to 1")
    return float(_weighted_median_rows(v, w))


def mad(x: Sequence[float]) -> float:
    """Median absolute deviation from the median, without a consistency constant."""
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.size < 1:
        raise DataError("mad needs a non-empty vector")
    return float(_mad_rows(x))


def spatial_autocov(W: WeightMatrix, z) -> float:
    """n^-1 sum_i z_i L[z]_i."""
    x = _values(z)
    _check_dims(W, x.shape[0])
    return float(x @ _lag(W, x[None])[0]) / x.shape[0]


def _gk(Z: np.ndarray, Y: np.ndarray, scale: ScaleEstimator) -> np.ndarray:
    if scale is ScaleEstimator.MAD:
        S = _mad_rows
    else:
        def S(X):
            return X.std(axis=-1, ddof=1)
    sz, sy = S(Z), S(Y)
    with np.errstate(divide="ignore", invalid="ignore"):
        a = (1.0 / sz)[..., None]
        b = (1.0 / sy)[..., None]
        plus = S(a * Z + b * Y) ** 2
        minus = S(a * Z - b * Y) ** 2
        out = (plus - minus) / (plus + minus)
    bad = (sz == 0) | (sy == 0) | (plus == 0) | (minus == 0) | ~np.isfinite(out)
    out[bad] = np.nan
    return out


def statistics(
    W: WeightMatrix,
    Z,
    kinds: Iterable[MeasureKind | str] = ALL_KINDS,
    scale: ScaleEstimator = ScaleEstimator.MAD,
) -> np.ndarray:
    """Evaluate several statistics on a stack of centered fields.

    Parameters
    ----------
    W : WeightMatrix
    Z : array_like, shape (b, n) or (n,)
    kinds : iterable of MeasureKind
    scale : ScaleEstimator
        Scale used inside GK and GK2. ``STDDEV`` exists for cross-checking.

    Returns
    -------
    ndarray, shape (len(kinds), b)
        NaN marks a statistic that is undefined for that field.
    """
    kinds = [MeasureKind.parse(k) for k in kinds]
    Z = _as_batch(W, Z)
    n = Z.shape[-1]
    zz = np.einsum("bi,bi->b", Z, Z)
    degenerate = zz == 0
    zz_safe = np.where(degenerate, 1.0, zz)

    cache: dict[str, np.ndarray] = {}

    def lag():
        if "L" not in cache:
            cache["L"] = _lag(W, Z)
        return cache["L"]

    def rlag():
        if "RL" not in cache:
            cache["RL"] = _robust_lag(W, Z)
        return cache["RL"]

    def edge_diff():
        if "D" not in cache:
            i, j, w = W.edges
            cache["D"] = Z[:, i] - Z[:, j]
        return cache["D"]

    eta_bar = W.mean_connectivity
    out = np.empty((len(kinds), Z.shape[0]))
    for row, kind in enumerate(kinds):
        if kind is MeasureKind.MC:
            val = np.einsum("bi,bi->b", Z, lag()) / zz_safe
        elif kind is MeasureKind.RMC:
            val = np.einsum("bi,bi->b", Z, rlag()) / zz_safe
        elif kind in (MeasureKind.APLE, MeasureKind.RAPLE):
            Y = lag() if kind is MeasureKind.APLE else rlag()
            # Z'W'Z and Z'WZ are the same scalar; both terms kept as written.
            zwtz = np.einsum("bi,bi->b", Y, Z)
            zwz = np.einsum("bi,bi->b", Z, Y)
            denom = np.einsum("bi,bi->b", Y, Y) + W.trace_w2 * zz / n
            val = 0.5 * (zwtz + zwz) / np.where(degenerate, 1.0, denom)
        elif kind is MeasureKind.GC:
            w = W.edges[2]
            num = (edge_diff() ** 2) @ w / (2 * n * eta_bar)
            val = num / (zz_safe / (n - 1))
        elif kind is MeasureKind.RGC:
            w = W.edges[2]
            num = np.abs(edge_diff()) @ w / (2 * n * eta_bar)
            den = np.abs(Z).sum(axis=-1) / (n - 1)
            val = num / np.where(degenerate, 1.0, den)
        elif kind is MeasureKind.GK:
            val = _gk(Z, lag(), scale)
        elif kind is MeasureKind.GK2:
            val = _gk(Z, rlag(), scale)
        else:  # pragma: no cover - enum is exhaustive
            raise AssertionError(kind)
        out[row] = val
    out[:, degenerate] = np.nan
    return out


def compute_measure(
    kind: MeasureKind | str,
    W: WeightMatrix,
    z,
    scale: ScaleEstimator = ScaleEstimator.MAD,
) -> float:
    """Evaluate one statistic on one centered field.

    Raises
    ------
    ZeroVarianceError
        If the field is identically zero.
    ZeroScaleError
        If a MAD inside GK or GK2 vanishes.
    """
    kind = MeasureKind.parse(kind)
    x = _values(z)
    _check_dims(W, x.shape[0])
    if not np.any(x):
        raise ZeroVarianceError("field is identically zero after centering; statistic undefined")
    value = statistics(W, x[None], [kind], scale)[0, 0]
    if np.isnan(value):
        raise ZeroScaleError(f"{kind.value}: a robust scale (MAD) is zero; statistic undefined")
    return float(value)
