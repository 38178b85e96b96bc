"""Monte Carlo power study over measures, distributions, rho, schemes and grids.

A cell is one (design, distribution, rho) combination, where a design is a
lattice size with a contiguity scheme. Within a replication one simulated
field is tested by every measure against the same permutations, so the
measures are compared on paired data.
"""

from __future__ import annotations

import enum
import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import DataError, UndefinedStatisticError
from .inference import Alternative, permutation_tests
from .lattice import LatticeSpec, Scheme, WeightMatrix, build_lattice_weights
from .measures import ALL_KINDS, Centering, MeasureKind
from .randfield import DistributionKind, MixtureLayout, RngStream, sar_generate

__all__ = [
    "PowerStudyConfig",
    "CellKey",
    "CellResult",
    "PowerTable",
    "TableLayout",
    "FormattedTable",
    "run_power_study",
    "emit_table",
    "DIRECTIONAL",
]

log = logging.getLogger(__name__)

DIRECTIONAL = "directional"
DEFAULT_RHOS = (-0.7, -0.5, -0.3, 0.0, 0.3, 0.5, 0.7)
MAX_FIELD_REDRAWS = 100


def _grid_label(rows: int, cols: int) -> str:
    return f"{rows}x{cols}"


@dataclass(frozen=True)
class PowerStudyConfig:
    """Everything that determines a power table.

    ``alternative`` is a test direction or ``"directional"``, which tests
    toward the sign of the simulated rho (positive autocorrelation at
    rho = 0). ``scheme_overrides`` restricts the schemes run on particular
    grids, e.g. ``{"20x20": ["queen"]}``.
    """

    grids: tuple[tuple[int, int], ...] = ((10, 10), (20, 20))
    schemes: tuple[Scheme, ...] = (Scheme.ROOK, Scheme.QUEEN)
    scheme_overrides: dict = field(default_factory=lambda: {"20x20": (Scheme.QUEEN,)})
    torus: bool = False
    rhos: tuple[float, ...] = DEFAULT_RHOS
    distributions: tuple[DistributionKind, ...] = tuple(DistributionKind)
    measures: tuple[MeasureKind, ...] = ALL_KINDS
    replications: int = 1000
    n_perm: int = 999
    alpha: float = 0.05
    seed: int = 2024
    alternative: str = DIRECTIONAL
    mixture_layout: MixtureLayout = MixtureLayout.BLOCK
    centering: Centering = Centering.MEAN

    def __post_init__(self) -> None:
        s = object.__setattr__
        s(self, "grids", tuple((int(r), int(c)) for r, c in self.grids))
        s(self, "schemes", tuple(Scheme.parse(x) for x in self.schemes))
        s(
            self,
            "scheme_overrides",
            {str(k): tuple(Scheme.parse(x) for x in v) for k, v in dict(self.scheme_overrides).items()},
        )
        s(self, "rhos", tuple(float(r) for r in self.rhos))
        s(self, "distributions", tuple(DistributionKind.parse(d) for d in self.distributions))
        s(self, "measures", tuple(MeasureKind.parse(m) for m in self.measures))
        s(self, "mixture_layout", MixtureLayout.parse(self.mixture_layout))
        s(self, "centering", Centering.parse(self.centering))
        if self.alternative != DIRECTIONAL:
            s(self, "alternative", Alternative.parse(self.alternative).value)
        if not self.grids or not self.schemes or not self.rhos or not self.distributions or not self.measures:
            raise DataError("grids, schemes, rhos, distributions and measures must all be non-empty")
        for r in self.rhos:
            if not -1 < r < 1:
                raise DataError(f"rho must lie in (-1, 1), got {r}")
        if self.replications < 1:
            raise DataError("replications must be >= 1")
        if not 0 < self.alpha < 1:
            raise DataError("alpha must lie in (0, 1)")
        if not 0 <= self.seed < 2**64:
            raise DataError("seed must be a 64-bit unsigned integer")
        for g in self.grids:
            LatticeSpec(*g)

    def designs(self) -> list[LatticeSpec]:
        out = []
        for rows, cols in self.grids:
            for scheme in self.scheme_overrides.get(_grid_label(rows, cols), self.schemes):
                out.append(LatticeSpec(rows, cols, scheme, self.torus))
        return out

    def alternative_for(self, rho: float) -> Alternative:
        if self.alternative != DIRECTIONAL:
            return Alternative(self.alternative)
        return Alternative.NEGATIVE if rho < 0 else Alternative.POSITIVE

    def to_dict(self) -> dict:
        return {
            "grids": [list(g) for g in self.grids],
            "schemes": [s.value for s in self.schemes],
            "scheme_overrides": {k: [s.value for s in v] for k, v in self.scheme_overrides.items()},
            "torus": self.torus,
            "rhos": list(self.rhos),
            "distributions": [d.value for d in self.distributions],
            "measures": [m.value for m in self.measures],
            "replications": self.replications,
            "n_perm": self.n_perm,
            "alpha": self.alpha,
            "seed": self.seed,
            "alternative": self.alternative,
            "mixture_layout": self.mixture_layout.value,
            "centering": self.centering.value,
        }

    @classmethod
    def from_dict(cls, data: dict) -> PowerStudyConfig:
        known = set(cls.__dataclass_fields__)
        unknown = set(data) - known
        if unknown:
            raise DataError(f"unknown power-study config keys: {sorted(unknown)}")
        kwargs = dict(data)
        for key in ("grids", "schemes", "rhos", "distributions", "measures"):
            if key in kwargs:
                value = kwargs[key]
                if key == "grids":
                    value = [tuple(int(p) for p in g.lower().split("x")) if isinstance(g, str) else g for g in value]
                kwargs[key] = tuple(value)
        return cls(**kwargs)


@dataclass(frozen=True, order=True)
class CellKey:
    measure: str
    distribution: str
    rho: float
    scheme: str
    grid: str


@dataclass(frozen=True)
class CellResult:
    rejections: int
    replications: int
    redraws: int = 0
    undefined_permutations: int = 0

    @property
    def rate(self) -> float:
        return self.rejections / self.replications

    @property
    def se(self) -> float:
        p = self.rate
        return math.sqrt(p * (1 - p) / self.replications)


@dataclass
class PowerTable:
    config: PowerStudyConfig
    cells: dict[CellKey, CellResult]

    def rate(self, measure, distribution, rho, scheme, grid="10x10") -> float:
        key = CellKey(
            MeasureKind.parse(measure).value,
            DistributionKind.parse(distribution).value,
            float(rho),
            Scheme.parse(scheme).value,
            grid,
        )
        try:
            return self.cells[key].rate
        except KeyError:
            raise DataError(f"no cell {key}") from None

    def to_records(self) -> list[dict]:
        rows = []
        for key in sorted(self.cells):
            c = self.cells[key]
            rows.append(
                {
                    "measure": key.measure,
                    "distribution": key.distribution,
                    "rho": key.rho,
                    "scheme": key.scheme,
                    "grid": key.grid,
                    "rate": c.rate,
                    "se": c.se,
                    "rejections": c.rejections,
                    "replications": c.replications,
                    "redraws": c.redraws,
                    "undefined_permutations": c.undefined_permutations,
                }
            )
        return rows

    def to_json(self) -> str:
        return json.dumps({"config": self.config.to_dict(), "cells": self.to_records()}, indent=2)

    @classmethod
    def from_json(cls, text: str) -> PowerTable:
        data = json.loads(text)
        config = PowerStudyConfig.from_dict(data["config"])
        cells = {}
        for r in data["cells"]:
            key = CellKey(r["measure"], r["distribution"], float(r["rho"]), r["scheme"], r["grid"])
            cells[key] = CellResult(r["rejections"], r["replications"], r["redraws"], r["undefined_permutations"])
        return cls(config, cells)


@lru_cache(maxsize=16)
def _weights(spec: LatticeSpec) -> WeightMatrix:
    return build_lattice_weights(spec)


def _cell_label(spec: LatticeSpec, dist: DistributionKind, rho: float) -> str:
    return f"power/{spec.label}/{dist.value}/rho={rho!r}"


def _run_chunk(config: PowerStudyConfig, spec: LatticeSpec, dist: DistributionKind, rho: float, reps: range):
    """Rejection counts for a range of replications of one cell."""
    W = _weights(spec)
    alternative = config.alternative_for(rho)
    base = RngStream(config.seed, _cell_label(spec, dist, rho))
    rejections = np.zeros(len(config.measures), dtype=np.int64)
    undefined = np.zeros(len(config.measures), dtype=np.int64)
    redraws = 0
    for rep in reps:
        stream = base.at(rep)
        for _ in range(MAX_FIELD_REDRAWS):
            z = sar_generate(rho, W, dist, stream.child("field").generator(), config.mixture_layout, config.centering)
            try:
                results = permutation_tests(
                    config.measures, W, z, config.n_perm, config.alpha, stream.child("perm"), alternative
                )
            except UndefinedStatisticError:
                redraws += 1
                stream = stream.retry()
                continue
            break
        else:
            raise UndefinedStatisticError(f"{_cell_label(spec, dist, rho)} rep {rep}: no usable field")
        rejections += [r.reject for r in results]
        undefined += [r.n_undefined for r in results]
    return rejections, undefined, redraws


def _chunks(n: int, size: int) -> list[range]:
    return [range(lo, min(n, lo + size)) for lo in range(0, n, size)]


def run_power_study(config: PowerStudyConfig, threads: int | None = None, chunk_size: int = 50) -> PowerTable:
    """Simulate every cell of ``config`` and count rejections.

    Parameters
    ----------
    config : PowerStudyConfig
    threads : int, optional
        Number of worker processes; defaults to the available cores. The
        table does not depend on it.
    chunk_size : int
        Replications per work unit.
    """
    threads = threads or os.cpu_count() or 1
    jobs = []
    for spec in config.designs():
        for dist in config.distributions:
            for rho in config.rhos:
                for reps in _chunks(config.replications, chunk_size):
                    jobs.append((spec, dist, rho, reps))

    totals: dict[tuple, list] = {}

    def collect(job, result):
        spec, dist, rho, _ = job
        key = (spec, dist, rho)
        acc = totals.setdefault(key, [0, 0, 0])
        acc[0] = acc[0] + result[0]
        acc[1] = acc[1] + result[1]
        acc[2] += result[2]

    if threads > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=threads) as pool:
            futures = [pool.submit(_run_chunk, config, *job) for job in jobs]
            for job, fut in zip(jobs, futures):
                collect(job, fut.result())
    else:
        for k, job in enumerate(jobs):
            collect(job, _run_chunk(config, *job))
            log.debug("power chunk %d/%d done", k + 1, len(jobs))

    cells = {}
    for (spec, dist, rho), (rej, undef, redraws) in totals.items():
        for i, m in enumerate(config.measures):
            key = CellKey(m.value, dist.value, rho, spec.scheme.value, _grid_label(spec.rows, spec.cols))
            cells[key] = CellResult(int(rej[i]), config.replications, redraws, int(undef[i]))
    return PowerTable(config, cells)


class TableLayout(str, enum.Enum):
    TABLE1 = "table1"
    APPENDIX_LONG = "appendix"

    @classmethod
    def parse(cls, value: str | TableLayout) -> TableLayout:
        if isinstance(value, cls):
            return value
        aliases = {"table1": cls.TABLE1, "appendix": cls.APPENDIX_LONG, "appendixlong": cls.APPENDIX_LONG}
        try:
            return aliases[str(value).strip().lower()]
        except KeyError:
            raise DataError(f"unknown table layout {value!r}; expected 'table1' or 'appendix'") from None


@dataclass
class FormattedTable:
    """Rows ready for CSV output.

    ``value_columns`` hold full-precision rates; each has a ``<name>_2dp``
    companion rounded to two decimals for presentation.
    """

    key_columns: list[str]
    value_columns: list[str]
    rows: list[list]

    @property
    def header(self) -> list[str]:
        return self.key_columns + self.value_columns + [f"{c}_2dp" for c in self.value_columns]

    def csv_rows(self) -> list[list[str]]:
        nk = len(self.key_columns)
        out = []
        for row in self.rows:
            keys, vals = row[:nk], row[nk:]
            out.append([str(k) for k in keys] + [repr(float(v)) for v in vals] + [f"{v:.2f}" for v in vals])
        return out

    def to_records(self) -> list[dict]:
        return [dict(zip(self.key_columns + self.value_columns, row)) for row in self.rows]


def _lookup(table: PowerTable, keys: Iterable[CellKey]) -> list[float]:
    keys = list(keys)
    missing = [k for k in keys if k not in table.cells]
    if missing:
        listed = "; ".join(f"{k.measure}/{k.distribution}/rho={k.rho}/{k.scheme}/{k.grid}" for k in missing[:10])
        more = f" (+{len(missing) - 10} more)" if len(missing) > 10 else ""
        raise DataError(f"table is missing {len(missing)} cell(s): {listed}{more}")
    return [table.cells[k].rate for k in keys]


def emit_table(
    table: PowerTable,
    layout: TableLayout | str,
    distribution: DistributionKind | str | None = None,
    grid: str | None = None,
    scheme: Scheme | str | None = None,
) -> FormattedTable:
    """Arrange a power table for presentation.

    ``table1``: measures by distributions at rho = 0 for one design
    (default 10x10 queen when present). ``appendix``: one row per
    (measure, grid, scheme) with one column per rho, for one distribution
    or all of them stacked.
    """
    if not table.cells:
        raise DataError("power table is empty")
    layout = TableLayout.parse(layout)
    cfg = table.config
    measures = [m.value for m in cfg.measures]
    designs = cfg.designs()
    if layout is TableLayout.TABLE1:
        if grid is None:
            grids = [_grid_label(*g) for g in cfg.grids]
            grid = "10x10" if "10x10" in grids else grids[0]
        if scheme is None:
            present = {d.scheme for d in designs if _grid_label(d.rows, d.cols) == grid}
            scheme = Scheme.QUEEN if Scheme.QUEEN in present or not present else next(iter(present))
        scheme = Scheme.parse(scheme).value
        dists = [d.value for d in cfg.distributions]
        rows = []
        for m in measures:
            rates = _lookup(table, (CellKey(m, d, 0.0, scheme, grid) for d in dists))
            rows.append([m, *rates])
        return FormattedTable(["measure"], dists, rows)

    dists = [DistributionKind.parse(distribution).value] if distribution else [d.value for d in cfg.distributions]
    rho_cols = [f"{r:g}" for r in cfg.rhos]
    key_cols = (["distribution"] if len(dists) > 1 else []) + ["measure", "n", "W"]
    # report every gap at once rather than the first one hit
    _lookup(
        table,
        (
            CellKey(m, d, r, s.scheme.value, _grid_label(s.rows, s.cols))
            for d in dists
            for s in designs
            for m in measures
            for r in cfg.rhos
        ),
    )
    rows = []
    for d in dists:
        for spec in sorted({(s.rows, s.cols) for s in designs}):
            specs = sorted(
                (s for s in designs if (s.rows, s.cols) == spec), key=lambda s: s.scheme.short, reverse=False
            )
            for m in measures:
                for s in specs:
                    g = _grid_label(s.rows, s.cols)
                    rates = _lookup(table, (CellKey(m, d, r, s.scheme.value, g) for r in cfg.rhos))
                    prefix = [d] if len(dists) > 1 else []
                    rows.append([*prefix, m, s.n, s.scheme.short, *rates])
    return FormattedTable(key_cols, rho_cols, rows)
