"""Spatial weight matrices for regular lattices and general adjacency lists.

Locations on an ``rows x cols`` grid are numbered row-major: cell ``(r, c)``
has index ``r * cols + c``. Every matrix built here is row-standardized;
the raw (binary or user supplied) weights are kept only to report the
connectivity of each location and to export the matrix losslessly.
"""

from __future__ import annotations

import csv
import enum
import hashlib
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError, WeightsError

__all__ = [
    "Scheme",
    "LatticeSpec",
    "WeightMatrix",
    "build_lattice_weights",
    "from_adjacency_list",
    "is_symmetric",
    "read_adjacency_csv",
    "write_adjacency_csv",
]

SYMMETRY_TOL = 1e-12


class Scheme(str, enum.Enum):
    ROOK = "rook"
    QUEEN = "queen"

    @classmethod
    def parse(cls, value: str | Scheme) -> Scheme:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataError(f"unknown contiguity scheme {value!r}; expected 'rook' or 'queen'") from None

    @property
    def short(self) -> str:
        return "R" if self is Scheme.ROOK else "Q"


_OFFSETS = {
    Scheme.ROOK: ((-1, 0), (1, 0), (0, -1), (0, 1)),
    Scheme.QUEEN: ((-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)),
}


@dataclass(frozen=True)
class LatticeSpec:
    """A regular grid with a contiguity scheme, optionally wrapped onto a torus."""

    rows: int
    cols: int
    scheme: Scheme = Scheme.ROOK
    torus: bool = False

    def __post_init__(self) -> None:
        object.__setattr__(self, "scheme", Scheme.parse(self.scheme))
        if int(self.rows) != self.rows or int(self.cols) != self.cols:
            raise DataError(f"grid dimensions must be integers, got {self.rows}x{self.cols}")
        if self.rows < 2 or self.cols < 2:
            raise DataError(f"degenerate grid {self.rows}x{self.cols}: rows and cols must both be >= 2")

    @property
    def n(self) -> int:
        return self.rows * self.cols

    @property
    def label(self) -> str:
        suffix = "-torus" if self.torus else ""
        return f"{self.rows}x{self.cols}-{self.scheme.value}{suffix}"

    @classmethod
    def parse_grid(cls, grid: str, scheme: str | Scheme = Scheme.ROOK, torus: bool = False) -> LatticeSpec:
        """Build a spec from a ``"RxC"`` string such as ``"10x10"``."""
        try:
            r, c = (int(part) for part in grid.lower().split("x"))
        except ValueError:
            raise DataError(f"grid must look like 'RxC' (e.g. 10x10), got {grid!r}") from None
        return cls(r, c, Scheme.parse(scheme), torus)


@dataclass(frozen=True, eq=False)
class WeightMatrix:
    """Row-standardized sparse weight matrix.

    Attributes
    ----------
    matrix : scipy.sparse.csr_matrix
        Standardized weights, every row sums to one.
    raw : scipy.sparse.csr_matrix
        Weights as supplied (binary for lattices) with the same sparsity.
    scheme : str
        Free-form label of the topology (``"rook"``, ``"queen"``, ``"custom"``).
    """

    matrix: sp.csr_matrix
    raw: sp.csr_matrix
    scheme: str = "custom"

    def __post_init__(self) -> None:
        for m in (self.matrix, self.raw):
            m.data.setflags(write=False)
            m.indices.setflags(write=False)
            m.indptr.setflags(write=False)

    @property
    def n(self) -> int:
        return self.matrix.shape[0]

    @property
    def standardized(self) -> bool:
        return True

    @cached_property
    def connectivity(self) -> np.ndarray:
        """Pre-standardization row sums (the eta_i of each location)."""
        eta = np.asarray(self.raw.sum(axis=1)).ravel()
        eta.setflags(write=False)
        return eta

    @property
    def mean_connectivity(self) -> float:
        """Average connectivity of the standardized matrix, identically 1."""
        return float(np.asarray(self.matrix.sum(axis=1)).mean())

    @cached_property
    def n_neighbors(self) -> np.ndarray:
        return np.diff(self.matrix.indptr)

    def neighbors(self, i: int) -> list[tuple[int, float]]:
        lo, hi = self.matrix.indptr[i], self.matrix.indptr[i + 1]
        return [(int(j), float(w)) for j, w in zip(self.matrix.indices[lo:hi], self.matrix.data[lo:hi])]

    @cached_property
    def edges(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """COO triplets ``(i, j, w_ij)`` of the standardized matrix."""
        rows = np.repeat(np.arange(self.n), self.n_neighbors)
        return rows, np.asarray(self.matrix.indices), np.asarray(self.matrix.data)

    @cached_property
    def padded(self) -> tuple[np.ndarray, np.ndarray]:
        """Neighbor indices and weights padded to the maximal degree.

        Padding slots point at index ``n`` and carry weight 0; callers append
        a sentinel column to the field before gathering.
        """
        k = int(self.n_neighbors.max())
        idx = np.full((self.n, k), self.n, dtype=np.intp)
        wts = np.zeros((self.n, k))
        rows, cols, w = self.edges
        slot = np.arange(len(rows)) - np.repeat(self.matrix.indptr[:-1], self.n_neighbors)
        idx[rows, slot] = cols
        wts[rows, slot] = w
        return idx, wts

    @cached_property
    def trace_w2(self) -> float:
        """tr(W^2) = sum over stored pairs of w_ij * w_ji."""
        return float(self.matrix.multiply(self.matrix.T).sum())

    @cached_property
    def fingerprint(self) -> str:
        h = hashlib.blake2b(digest_size=16)
        for a in (self.matrix.indptr, self.matrix.indices, self.matrix.data):
            h.update(np.ascontiguousarray(a).tobytes())
        return h.hexdigest()

    def dense(self) -> np.ndarray:
        return self.matrix.toarray()

    def to_adjacency_list(self) -> list[tuple[int, int, float]]:
        """Raw ``(i, j, w)`` triplets; re-ingesting them rebuilds identical weights."""
        coo = self.raw.tocoo()
        order = np.lexsort((coo.col, coo.row))
        return [(int(coo.row[k]), int(coo.col[k]), float(coo.data[k])) for k in order]

    def permuted(self, perm: Sequence[int]) -> WeightMatrix:
        """Relabel locations: new location ``k`` is old location ``perm[k]``."""
        p = np.asarray(perm)
        return WeightMatrix(
            self.matrix[p][:, p].tocsr(), self.raw[p][:, p].tocsr(), self.scheme
        )


def _standardize(raw: sp.csr_matrix) -> sp.csr_matrix:
    raw = raw.tocsr()
    raw.sort_indices()
    sums = np.asarray(raw.sum(axis=1)).ravel()
    counts = np.diff(raw.indptr)
    w = raw.copy()
    w.data = raw.data / np.repeat(sums, counts)
    return w


def build_lattice_weights(spec: LatticeSpec) -> WeightMatrix:
    """Binary rook or queen contiguity on a grid, then row-standardized."""
    rows, cols = spec.rows, spec.cols
    ii, jj = [], []
    for r in range(rows):
        for c in range(cols):
            nbrs = set()
            for dr, dc in _OFFSETS[spec.scheme]:
                rr, cc = r + dr, c + dc
                if spec.torus:
                    rr, cc = rr % rows, cc % cols
                elif not (0 <= rr < rows and 0 <= cc < cols):
                    continue
                if (rr, cc) != (r, c):
                    nbrs.add(rr * cols + cc)
            ii.extend([r * cols + c] * len(nbrs))
            jj.extend(sorted(nbrs))
    raw = sp.csr_matrix((np.ones(len(ii)), (ii, jj)), shape=(spec.n, spec.n))
    return WeightMatrix(_standardize(raw), raw, spec.scheme.value)


def from_adjacency_list(pairs: Iterable[tuple[int, int, float]], n: int) -> WeightMatrix:
    """Build a standardized matrix from ``(i, j, raw_weight)`` triplets.

    Raises
    ------
    WeightsError
        On out-of-range indices, self-loops, nonpositive or duplicate
        weights, and isolated locations. The message names the index.
    """
    if n < 1:
        raise WeightsError(f"number of locations must be positive, got {n}")
    ii, jj, ww = [], [], []
    seen = set()
    for i, j, w in pairs:
        i, j, w = int(i), int(j), float(w)
        if not (0 <= i < n and 0 <= j < n):
            raise WeightsError(f"pair ({i}, {j}) out of range for n={n}")
        if i == j:
            raise WeightsError(f"self-loop at node {i}")
        if not w > 0:
            raise WeightsError(f"nonpositive weight {w} on pair ({i}, {j})")
        if (i, j) in seen:
            raise WeightsError(f"duplicate pair ({i}, {j})")
        seen.add((i, j))
        ii.append(i)
        jj.append(j)
        ww.append(w)
    degree = np.bincount(np.asarray(ii, dtype=np.intp), minlength=n)
    isolated = np.flatnonzero(degree == 0)
    if isolated.size:
        raise WeightsError(f"node {int(isolated[0])} isolated (no neighbors)")
    raw = sp.csr_matrix((ww, (ii, jj)), shape=(n, n))
    return WeightMatrix(_standardize(raw), raw, "custom")


def is_symmetric(W: WeightMatrix, tol: float = SYMMETRY_TOL) -> bool:
    diff = abs(W.matrix - W.matrix.T)
    return diff.nnz == 0 or float(diff.max()) <= tol


def read_adjacency_csv(path: str | Path, n: int | None = None) -> WeightMatrix:
    """Read an ``i,j,w`` CSV with zero-based indices."""
    path = Path(path)
    try:
        with path.open(newline="") as fh:
            reader = csv.DictReader(fh)
            if reader.fieldnames is None or not {"i", "j", "w"} <= set(reader.fieldnames):
                raise DataError(f"{path}: adjacency CSV needs header 'i,j,w'")
            triplets = []
            for lineno, row in enumerate(reader, start=2):
                try:
                    triplets.append((int(row["i"]), int(row["j"]), float(row["w"])))
                except (TypeError, ValueError):
                    raise DataError(f"{path}:{lineno}: malformed row {row}") from None
    except OSError as exc:
        raise DataError(f"cannot read {path}: {exc}") from exc
    if n is None:
        n = 1 + max(max(i, j) for i, j, _ in triplets) if triplets else 0
    return from_adjacency_list(triplets, n)


def write_adjacency_csv(W: WeightMatrix, path: str | Path) -> None:
    with Path(path).open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["i", "j", "w"])
        for i, j, w in W.to_adjacency_list():
            writer.writerow([i, j, repr(w)])
