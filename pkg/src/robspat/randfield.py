"""Innovation distributions and simultaneous autoregressive (SAR) fields.

Randomness is organized as counter-based substreams: a master seed plus an
experiment label and a replication index fully determine the generator, so
any single replication can be reproduced in isolation and results do not
depend on scheduling.
"""

from __future__ import annotations

import enum
import hashlib
import threading
from collections import OrderedDict
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .errors import DataError, SingularSystemError
from .lattice import WeightMatrix
from .measures import Centering, Field, center

__all__ = [
    "DistributionKind",
    "MixtureLayout",
    "RngStream",
    "sample_noise",
    "sar_solve",
    "sar_generate",
    "standardize",
]

MIXTURE_WEIGHT = 0.95
MIXTURE_SHIFT = 3.0


class DistributionKind(str, enum.Enum):
    NORMAL = "normal"
    CAUCHY = "cauchy"
    LAPLACE = "laplace"
    MIXTURE = "mixture"

    @classmethod
    def parse(cls, value: str | DistributionKind) -> DistributionKind:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataError(f"unknown distribution {value!r}; expected one of {[d.value for d in cls]}") from None


class MixtureLayout(str, enum.Enum):
    """How the contaminating component of the mixture is placed.

    ``iid``   each location independently from 0.95 N(0,1) + 0.05 N(3,1).
    ``block`` the last round(0.05 n) locations (in index order) draw from
              N(3,1), the rest from N(0,1); on a row-major lattice this is a
              contiguous strip along the last row.
    """

    IID = "iid"
    BLOCK = "block"

    @classmethod
    def parse(cls, value: str | MixtureLayout) -> MixtureLayout:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataError(f"unknown mixture layout {value!r}; expected 'iid' or 'block'") from None


def _label_words(label: str) -> list[int]:
    digest = hashlib.blake2b(label.encode("utf-8"), digest_size=16).digest()
    return [int.from_bytes(digest[k : k + 4], "little") for k in range(0, 16, 4)]


@dataclass(frozen=True)
class RngStream:
    """Identifies an independent random substream.

    Identical ``(seed, experiment, replication, attempt)`` always yields the
    same draws. ``attempt`` is bumped when a replication has to be redrawn.
    """

    seed: int
    experiment: str = ""
    replication: int = 0
    attempt: int = 0

    def __post_init__(self) -> None:
        if not 0 <= int(self.seed) < 2**64:
            raise DataError(f"seed must be a 64-bit unsigned integer, got {self.seed}")

    def generator(self) -> np.random.Generator:
        seed = int(self.seed)
        entropy = [seed & 0xFFFFFFFF, seed >> 32, *_label_words(self.experiment), self.replication, self.attempt]
        return np.random.Generator(np.random.PCG64(np.random.SeedSequence(entropy)))

    def child(self, label: str) -> RngStream:
        return replace(self, experiment=f"{self.experiment}/{label}")

    def at(self, replication: int, attempt: int = 0) -> RngStream:
        return replace(self, replication=replication, attempt=attempt)

    def retry(self) -> RngStream:
        return replace(self, attempt=self.attempt + 1)


def _rng(stream: RngStream | np.random.Generator) -> np.random.Generator:
    return stream if isinstance(stream, np.random.Generator) else stream.generator()


def sample_noise(
    kind: DistributionKind | str,
    n: int,
    stream: RngStream | np.random.Generator,
    mixture_layout: MixtureLayout | str = MixtureLayout.IID,
) -> np.ndarray:
    """Draw an innovation vector of length ``n``.

    Normal(0, 1), standard Cauchy, Laplace(0, 1), or the normal mixture
    0.95 N(0,1) + 0.05 N(3,1) (see :class:`MixtureLayout`).
    """
    kind = DistributionKind.parse(kind)
    if n < 1:
        raise DataError(f"n must be positive, got {n}")
    rng = _rng(stream)
    if kind is DistributionKind.NORMAL:
        return rng.standard_normal(n)
    if kind is DistributionKind.CAUCHY:
        return rng.standard_cauchy(n)
    if kind is DistributionKind.LAPLACE:
        return rng.laplace(0.0, 1.0, n)
    layout = MixtureLayout.parse(mixture_layout)
    if layout is MixtureLayout.IID:
        shifted = rng.random(n) >= MIXTURE_WEIGHT
    else:
        shifted = np.zeros(n, dtype=bool)
        shifted[n - int(round((1 - MIXTURE_WEIGHT) * n)) :] = True
    return rng.standard_normal(n) + MIXTURE_SHIFT * shifted


class _FactorCache:
    """LU factors of (I - rho W), keyed by matrix fingerprint and rho."""

    def __init__(self, maxsize: int = 32):
        self._maxsize = maxsize
        self._data: OrderedDict = OrderedDict()
        self._lock = threading.Lock()

    def get(self, rho: float, W: WeightMatrix):
        key = (W.fingerprint, float(rho))
        with self._lock:
            if key in self._data:
                self._data.move_to_end(key)
                return self._data[key]
        A = np.eye(W.n) - rho * W.dense()
        lu, piv = scipy.linalg.lu_factor(A, check_finite=True)
        if not np.all(np.isfinite(lu)) or np.any(np.diag(lu) == 0):
            raise SingularSystemError(f"I - rho W is singular for rho={rho}")
        with self._lock:
            self._data[key] = (lu, piv)
            if len(self._data) > self._maxsize:
                self._data.popitem(last=False)
        return lu, piv


_factors = _FactorCache()


def sar_solve(rho: float, W: WeightMatrix, eps: np.ndarray) -> np.ndarray:
    """Solve (I - rho W) Z = eps; returns the uncentered Z."""
    rho = float(rho)
    if not abs(rho) < 1:
        raise SingularSystemError(f"|rho| must be < 1 for a row-standardized W, got {rho}")
    eps = np.asarray(eps, dtype=float)
    if eps.shape != (W.n,):
        raise DataError(f"innovation vector has shape {eps.shape}, expected ({W.n},)")
    if rho == 0.0:
        return eps.copy()
    z = scipy.linalg.lu_solve(_factors.get(rho, W), eps)
    if not np.all(np.isfinite(z)):
        raise SingularSystemError(f"SAR solve produced non-finite values for rho={rho}")
    return z


def sar_generate(
    rho: float,
    W: WeightMatrix,
    kind: DistributionKind | str,
    stream: RngStream | np.random.Generator,
    mixture_layout: MixtureLayout | str = MixtureLayout.IID,
    centering: Centering | str = Centering.MEAN,
) -> Field:
    """Simulate Z = rho W Z + eps and return it centered."""
    eps = sample_noise(kind, W.n, stream, mixture_layout)
    return center(sar_solve(rho, W, eps), centering)


def standardize(z: Field | np.ndarray) -> Field:
    """Zero mean and unit sample variance."""
    x = np.asarray(z.values if isinstance(z, Field) else z, dtype=float)
    x = x - x.mean()
    sd = x.std(ddof=1)
    if sd == 0:
        raise DataError("cannot standardize a constant field")
    return Field(x / sd, Centering.MEAN)
