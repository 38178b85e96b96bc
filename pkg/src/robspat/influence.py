"""Empirical influence of contaminating a single location.

The influence of replacing the value at one location is
``n * (statistic(contaminated) - statistic(original))``. Averaging it over
many simulated SAR fields and a grid of contamination values gives an
influence curve per statistic.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError
from .lattice import LatticeSpec, Scheme, WeightMatrix, build_lattice_weights, is_symmetric
from .measures import (
    Centering,
    Field,
    MeasureKind,
    compute_measure,
    spatial_autocov,
    statistics,
)
from .randfield import DistributionKind, RngStream, sample_noise, sar_solve, standardize

__all__ = [
    "contaminate",
    "prezero",
    "empirical_influence",
    "autocov_influence_simulated",
    "autocov_influence_analytic",
    "CurveSettings",
    "InfluenceCurve",
    "influence_curves",
    "influence_curve",
    "write_curves_csv",
]


def _check_unit(z: Field, unit: int) -> None:
    if not 0 <= unit < z.n:
        raise DataError(f"unit {unit} out of range for a field of {z.n} locations")


def contaminate(z: Field, unit: int, value: float) -> Field:
    """Replace the value at ``unit`` and re-center.

    For a mean-centered field the new mean is ``(value - z[unit]) / n``,
    which is subtracted directly so that replacing a value by itself is an
    exact no-op.
    """
    _check_unit(z, unit)
    x = z.values.copy()
    delta = float(value) - x[unit]
    x[unit] = float(value)
    if z.centering is Centering.MEAN:
        x -= delta / x.size
    elif z.centering is Centering.MEDIAN:
        x -= np.median(x)
    return Field(x, z.centering)


def prezero(z: Field, unit: int) -> Field:
    """Set ``unit`` to zero and re-center the remaining values among themselves.

    The result is still mean-centered and has exactly 0 at ``unit``.
    """
    _check_unit(z, unit)
    x = z.values.copy()
    others = np.ones(x.size, dtype=bool)
    others[unit] = False
    if z.centering is Centering.MEAN:
        x[others] -= x[others].mean()
    x[unit] = 0.0
    return Field(x, z.centering)


def empirical_influence(kind: MeasureKind | str, W: WeightMatrix, z: Field, unit: int, value: float) -> float:
    kind = MeasureKind.parse(kind)
    cont = contaminate(z, unit, value)
    return z.n * (compute_measure(kind, W, cont) - compute_measure(kind, W, z))


def autocov_influence_simulated(W: WeightMatrix, z: Field, unit: int, value: float) -> float:
    """n * change in the spatial autocovariance, by direct evaluation."""
    cont = contaminate(z, unit, value)
    return z.n * (spatial_autocov(W, cont) - spatial_autocov(W, z))


def autocov_influence_analytic(W: WeightMatrix, z: Field, unit: int, value: float) -> float:
    """Closed-form influence of contamination on the spatial autocovariance.

    Valid for a symmetric row-standardized W (a torus lattice) and a
    mean-centered field that is 0 at ``unit``:

        2 * value * sum_i w_{i,unit} z_i - value**2 / n

    a downward parabola through the origin.
    """
    _check_unit(z, unit)
    if not is_symmetric(W):
        raise DataError("analytic autocovariance influence requires a symmetric weight matrix")
    x = z.values
    scale = max(1.0, float(np.abs(x).max()))
    if abs(x[unit]) > 1e-12 * scale:
        raise DataError(f"unit {unit} must be 0 before contamination, found {x[unit]!r}")
    if abs(x.sum()) > 1e-9 * scale * x.size:
        raise DataError("field must be mean-centered")
    col = W.matrix[:, unit].toarray().ravel()
    neighbor_sum = float(col @ x)
    return 2.0 * value * neighbor_sum - value**2 / x.size


def _default_grid() -> tuple[float, ...]:
    return tuple(float(v) for v in np.linspace(-10.0, 10.0, 41))


@dataclass(frozen=True)
class CurveSettings:
    """Simulation settings for influence curves.

    ``unit=None`` picks a uniformly random location per run; an integer
    fixes it. With ``prezero`` the chosen location is set to 0 before
    contamination, so every curve passes through the origin.
    """

    lattice: LatticeSpec = LatticeSpec(10, 10, Scheme.ROOK)
    rho: float = 0.5
    distribution: DistributionKind = DistributionKind.NORMAL
    grid: tuple[float, ...] = field(default_factory=_default_grid)
    runs: int = 1000
    unit: int | None = None
    prezero: bool = True
    seed: int = 42

    def __post_init__(self) -> None:
        g = np.asarray(self.grid, dtype=float)
        if g.ndim != 1 or g.size == 0 or np.any(np.diff(g) <= 0):
            raise DataError("contamination grid must be a strictly increasing non-empty sequence")
        object.__setattr__(self, "grid", tuple(float(v) for v in g))
        object.__setattr__(self, "distribution", DistributionKind.parse(self.distribution))
        if self.runs < 1:
            raise DataError("runs must be >= 1")
        if not abs(self.rho) < 1:
            raise DataError(f"rho must lie in (-1, 1), got {self.rho}")

    def to_dict(self) -> dict:
        d = asdict(self)
        d["lattice"] = {
            "rows": self.lattice.rows,
            "cols": self.lattice.cols,
            "scheme": self.lattice.scheme.value,
            "torus": self.lattice.torus,
        }
        d["distribution"] = self.distribution.value
        d["grid"] = list(self.grid)
        return d


@dataclass(frozen=True, eq=False)
class InfluenceCurve:
    kind: MeasureKind
    grid: np.ndarray
    mean_influence: np.ndarray
    runs: int
    settings: dict
    redraws: int = 0

    def max_abs(self) -> float:
        return float(np.abs(self.mean_influence).max())

    def oriented(self) -> np.ndarray:
        """Influence on the autocorrelation-oriented statistic (1 - GC for the Geary pair)."""
        return self.kind.orientation * self.mean_influence


def _one_run(W, kinds, settings, grid, base_stream, r):
    redraws = 0
    stream = base_stream.at(r)
    while True:
        rng = stream.generator()
        eps = sample_noise(settings.distribution, W.n, rng)
        z = standardize(sar_solve(settings.rho, W, eps))
        unit = int(rng.integers(W.n)) if settings.unit is None else settings.unit
        if settings.prezero:
            z = prezero(z, unit)
        base = statistics(W, z.values[None], kinds)[:, 0]
        stack = np.repeat(z.values[None], grid.size, axis=0)
        delta = grid - z.values[unit]
        stack[:, unit] = grid
        stack -= (delta / W.n)[:, None]
        cont = statistics(W, stack, kinds)
        if np.all(np.isfinite(base)) and np.all(np.isfinite(cont)):
            return W.n * (cont - base[:, None]), redraws
        redraws += 1
        stream = stream.retry()


def influence_curves(
    kinds: Iterable[MeasureKind | str],
    settings: CurveSettings = CurveSettings(),
    threads: int = 1,
) -> dict[MeasureKind, InfluenceCurve]:
    """Average influence curves for several statistics over shared runs.

    Each run draws a standardized SAR field, chooses a location, and
    evaluates all statistics on the whole contamination grid. A run on
    which some statistic is undefined is redrawn from the next substream.
    Results do not depend on ``threads``.
    """
    kinds = [MeasureKind.parse(k) for k in kinds]
    if settings.unit is not None:
        _check_unit(Field(np.zeros(settings.lattice.n)), settings.unit)
    W = build_lattice_weights(settings.lattice)
    grid = np.asarray(settings.grid)
    base_stream = RngStream(settings.seed, "influence")
    total = np.zeros((len(kinds), grid.size))
    redraws = 0

    def work(r):
        return _one_run(W, kinds, settings, grid, base_stream, r)

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = pool.map(work, range(settings.runs))
            for infl, extra in results:
                total += infl
                redraws += extra
    else:
        for r in range(settings.runs):
            infl, extra = work(r)
            total += infl
            redraws += extra
    mean = total / settings.runs
    meta = settings.to_dict()
    return {
        k: InfluenceCurve(k, grid.copy(), mean[i].copy(), settings.runs, meta, redraws)
        for i, k in enumerate(kinds)
    }


def influence_curve(kind: MeasureKind | str, settings: CurveSettings = CurveSettings(), threads: int = 1) -> InfluenceCurve:
    kind = MeasureKind.parse(kind)
    return influence_curves([kind], settings, threads)[kind]


def write_curves_csv(curves: Sequence[InfluenceCurve], path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["z1", "mean_influence", "kind"])
        for curve in curves:
            for z1, val in zip(curve.grid, curve.mean_influence):
                writer.writerow([repr(float(z1)), repr(float(val)), curve.kind.value])
