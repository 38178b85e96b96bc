"""Conditional permutation tests of no spatial autocorrelation.

Observed values are shuffled over locations; the reference distribution
of any statistic is its value on the shuffled fields. One set of
permutations can be shared by several statistics so that they are compared
on identical randomizations.
"""

from __future__ import annotations

import enum
from dataclasses import asdict, dataclass
from typing import Iterable

import numpy as np

from .errors import DataError, ZeroScaleError, ZeroVarianceError
from .lattice import WeightMatrix
from .measures import Field, MeasureKind, statistics
from .randfield import RngStream

__all__ = ["Alternative", "TestResult", "permutation_test", "permutation_tests"]

MIN_PERMUTATIONS = 19
CHUNK = 256
# relative slack when comparing permuted statistics with the observed one
TIE_TOL = 1e-10


class Alternative(str, enum.Enum):
    """Direction of the alternative, in terms of spatial autocorrelation.

    ``positive`` means "more positive autocorrelation than under the null",
    i.e. larger MC/APLE/GK values but smaller GC/RGC values.
    """

    TWO_SIDED = "two-sided"
    POSITIVE = "positive"
    NEGATIVE = "negative"

    @classmethod
    def parse(cls, value: str | Alternative) -> Alternative:
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DataError(f"unknown alternative {value!r}") from None


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    kind: MeasureKind
    statistic: float
    p_value: float
    n_permutations: int
    alpha: float
    reject: bool
    alternative: Alternative = Alternative.TWO_SIDED
    permutation_mean: float = float("nan")
    n_undefined: int = 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["kind"] = self.kind.value
        d["alternative"] = self.alternative.value
        return d


def _draw(W: WeightMatrix, x: np.ndarray, kinds, count: int, rng: np.random.Generator) -> np.ndarray:
    out = np.empty((len(kinds), count))
    base = np.arange(x.size)
    for lo in range(0, count, CHUNK):
        m = min(CHUNK, count - lo)
        idx = rng.permuted(np.broadcast_to(base, (m, x.size)), axis=1)
        out[:, lo : lo + m] = statistics(W, x[idx], kinds)
    return out


def permutation_distribution(
    W: WeightMatrix,
    z,
    kinds: Iterable[MeasureKind | str],
    n_perm: int,
    stream: RngStream | np.random.Generator,
    max_retries: int = 10,
) -> np.ndarray:
    """Statistics on ``n_perm`` random relabelings, shape ``(len(kinds), n_perm)``.

    Undefined replicates (NaN) are redrawn up to ``max_retries`` rounds;
    whatever remains undefined stays NaN.
    """
    kinds = [MeasureKind.parse(k) for k in kinds]
    x = np.asarray(z.values if isinstance(z, Field) else z, dtype=float)
    rng = stream if isinstance(stream, np.random.Generator) else stream.generator()
    T = _draw(W, x, kinds, n_perm, rng)
    for _ in range(max_retries):
        bad_cols = np.flatnonzero(np.isnan(T).any(axis=0))
        if bad_cols.size == 0:
            break
        fresh = _draw(W, x, kinds, bad_cols.size, rng)
        block = T[:, bad_cols]
        T[:, bad_cols] = np.where(np.isnan(block), fresh, block)
    return T


def _p_value(t0: float, T: np.ndarray, orientation: int, alternative: Alternative) -> tuple[float, float]:
    valid = ~np.isnan(T)
    mean = float(T[valid].mean()) if valid.any() else float("nan")
    tol = TIE_TOL * max(1.0, abs(t0))
    with np.errstate(invalid="ignore"):
        if alternative is Alternative.TWO_SIDED:
            extreme = np.abs(T - mean) >= abs(t0 - mean) - tol
        elif alternative is Alternative.POSITIVE:
            extreme = orientation * T >= orientation * t0 - tol
        else:
            extreme = orientation * T <= orientation * t0 + tol
    count = int(np.count_nonzero(extreme & valid))
    return (1 + count) / (T.size + 1), mean


def permutation_tests(
    kinds: Iterable[MeasureKind | str],
    W: WeightMatrix,
    z,
    n_perm: int = 999,
    alpha: float = 0.05,
    stream: RngStream | np.random.Generator | None = None,
    alternative: Alternative | str = Alternative.TWO_SIDED,
    max_retries: int = 10,
) -> list[TestResult]:
    """Test several statistics against one shared set of permutations.

    The p-value is ``(1 + #extreme) / (n_perm + 1)``. Two-sided extremeness
    is measured as distance from the mean of the permuted statistics, which
    handles the nonzero null centre of MC and the centre near 1 of GC alike.

    Raises
    ------
    ZeroVarianceError
        If the field is constant.
    ZeroScaleError
        If an observed GK-type statistic is undefined.
    """
    kinds = [MeasureKind.parse(k) for k in kinds]
    alternative = Alternative.parse(alternative)
    if n_perm < MIN_PERMUTATIONS:
        raise DataError(f"need at least {MIN_PERMUTATIONS} permutations, got {n_perm}")
    if not 0 < alpha < 1:
        raise DataError(f"alpha must lie in (0, 1), got {alpha}")
    if stream is None:
        stream = RngStream(0, "permutation")
    x = np.asarray(z.values if isinstance(z, Field) else z, dtype=float)
    if not np.any(x):
        raise ZeroVarianceError("field is identically zero after centering; nothing to test")
    observed = statistics(W, x[None], kinds)[:, 0]
    undefined = [k.value for k, t in zip(kinds, observed) if np.isnan(t)]
    if undefined:
        raise ZeroScaleError(f"observed statistic undefined for {', '.join(undefined)}")
    T = permutation_distribution(W, x, kinds, n_perm, stream, max_retries)
    results = []
    for kind, t0, row in zip(kinds, observed, T):
        p, mean = _p_value(float(t0), row, kind.orientation, alternative)
        results.append(
            TestResult(
                kind=kind,
                statistic=float(t0),
                p_value=p,
                n_permutations=n_perm,
                alpha=alpha,
                reject=p <= alpha,
                alternative=alternative,
                permutation_mean=mean,
                n_undefined=int(np.isnan(row).sum()),
            )
        )
    return results


def permutation_test(
    kind: MeasureKind | str,
    W: WeightMatrix,
    z,
    n_perm: int = 999,
    alpha: float = 0.05,
    stream: RngStream | np.random.Generator | None = None,
    alternative: Alternative | str = Alternative.TWO_SIDED,
) -> TestResult:
    """Permutation test of one statistic; see :func:`permutation_tests`."""
    return permutation_tests([kind], W, z, n_perm, alpha, stream, alternative)[0]
