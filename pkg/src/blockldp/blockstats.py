"""Block empirical measures and empirical scaled-cumulant generating functions.

A sequence is cut into k consecutive blocks of length n; the block empirical
measure is the uniform measure on the k normalized block sums, and the
empirical SCGF is

    L_n(lambda) = (1/n) * log( (1/k) * sum_j exp(n * <lambda, mean_j>) )

evaluated through a log-sum-exp shift.  Every reduction in this module uses
one fixed pairwise (tree) summation over index order, so serial, chunked and
parallel evaluations agree bit-exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ._errors import DataError, UsageError
from .sources import SeriesSource

_CHUNK_VALUES = 1 << 21


def pairwise_sum(a: np.ndarray, axis: int = -1) -> np.ndarray:
    """Sum along an axis with the fixed pairwise tree.

    Level by level, element 2r is added to element 2r+1 in index order; an
    odd trailing element is carried to the next level unchanged.  The result
    is a pure function of the operand order, independent of chunking or
    worker count, which is the determinism contract for every reduction in
    the package.
    """
    a = np.moveaxis(np.asarray(a, dtype=np.float64), axis, -1)
    if a.shape[-1] == 0:
        return np.zeros(a.shape[:-1])
    while a.shape[-1] > 1:
        m = a.shape[-1]
        even = m - (m % 2)
        s = a[..., 0:even:2] + a[..., 1:even:2]
        if m % 2:
            s = np.concatenate([s, a[..., m - 1 : m]], axis=-1)
        a = s
    return a[..., 0]


@dataclass(frozen=True)
class BlockStats:
    """Normalized block sums of one sample path.

    means[j] is the j-th block mean, shape (k, d); every coordinate of a
    bounded observable's block mean stays in the observable's range.
    """

    n: int
    k: int
    d: int
    means: np.ndarray


@dataclass
class SampledFunction:
    """A function sampled on a strictly increasing scalar grid.

    Values live in R extended by +inf (serialized as the literal "inf").
    meta carries run metadata such as n, k, seed and a model tag.
    """

    grid: np.ndarray
    values: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.grid = np.asarray(self.grid, dtype=np.float64)
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.grid.ndim != 1 or self.grid.shape != self.values.shape:
            raise UsageError("grid and values must be 1-d arrays of equal length")
        if self.grid.size >= 2 and not np.all(np.diff(self.grid) > 0):
            raise UsageError("grid must be strictly increasing")


def block_means(source: SeriesSource, n: int, k: int, start_index: int = 0) -> BlockStats:
    """Means of k consecutive length-n blocks starting at start_index.

    Parameters
    ----------
    source : SeriesSource
        Supplies n*k observations from start_index.
    n, k : int
        Block length and block count, both >= 1.

    Each block sum uses the fixed pairwise tree over its n observations, so
    the result does not depend on the internal batching.  Raises DataError
    when the source is exhausted, stating how many full blocks were
    available.
    """
    if n < 1 or k < 1:
        raise UsageError("block length and block count must be >= 1")
    if start_index < 0:
        raise UsageError("start_index must be >= 0")
    d = source.d
    means = np.empty((k, d), dtype=np.float64)
    step = max(1, _CHUNK_VALUES // max(1, n * d))
    for j0 in range(0, k, step):
        cnt = min(step, k - j0)
        try:
            batch = source.batch(start_index + j0 * n, cnt * n)
        except DataError as err:
            avail = getattr(err, "symbols_available", None)
            if avail is None:
                raise
            full = max(0, (int(avail) - start_index) // n)
            raise DataError(
                "source exhausted: only %d full blocks of length %d available "
                "from index %d, needed %d" % (full, n, start_index, k)
            ) from err
        sums = pairwise_sum(batch.reshape(cnt, n, d), axis=1)
        means[j0 : j0 + cnt] = sums / n
    return BlockStats(n=n, k=k, d=d, means=means)


def scgf_values(stats: BlockStats, lambdas: np.ndarray) -> np.ndarray:
    """Empirical SCGF values at an array of tilt vectors.

    lambdas has shape (G,) for d=1 or (G, d); the value at each lambda is
    (1/n) * (M + log(mean_j exp(n <lambda, mean_j> - M))) with M the maximum
    exponent, the mean taken with the fixed pairwise tree in block order.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim == 1 and stats.d != 1:
        raise UsageError("scalar tilt grid requires d=1 block stats")
    if lam.ndim == 2 and lam.shape[1] != stats.d:
        raise UsageError("tilt vectors have dimension %d, stats have d=%d"
                         % (lam.shape[1], stats.d))
    if not np.all(np.isfinite(stats.means)):
        raise DataError("block means contain non-finite entries")
    proj = stats.means[:, 0] if lam.ndim == 1 else None
    out = np.empty(lam.shape[0], dtype=np.float64)
    gstep = max(1, _CHUNK_VALUES // max(1, stats.k))
    for g0 in range(0, lam.shape[0], gstep):
        lam_c = lam[g0 : g0 + gstep]
        if lam.ndim == 1:
            t = np.outer(lam_c, proj) * stats.n
        else:
            t = (lam_c @ stats.means.T) * stats.n
        M = t.max(axis=1)
        terms = np.exp(t - M[:, None])
        mean = pairwise_sum(terms, axis=1) / stats.k
        out[g0 : g0 + gstep] = (M + np.log(mean)) / stats.n
    return out


def empirical_scgf(stats: BlockStats, lambdas, meta: dict | None = None) -> SampledFunction:
    """Empirical SCGF on a strictly increasing scalar tilt grid (d=1).

    Exact at lambda=0 (the pairwise mean of k ones is exactly 1).  For
    vector tilts with d>1 use scgf_values directly.
    """
    lam = np.asarray(lambdas, dtype=np.float64)
    if lam.ndim != 1:
        raise UsageError("empirical_scgf needs a 1-d tilt grid; "
                         "use scgf_values for vector tilts")
    base = {"n": stats.n, "k": stats.k, "d": stats.d}
    if meta:
        base.update(meta)
    return SampledFunction(grid=lam, values=scgf_values(stats, lam), meta=base)


def ball_mass(stats: BlockStats, x, eps: float) -> tuple[int, float]:
    """Count and fraction of block means in the closed ball B(x, eps)."""
    if not eps > 0:
        raise UsageError("ball radius must be > 0")
    center = np.atleast_1d(np.asarray(x, dtype=np.float64))
    if center.shape != (stats.d,):
        raise UsageError("ball center must have dimension %d" % stats.d)
    diff = stats.means - center[None, :]
    dist = np.sqrt(np.einsum("ij,ij->i", diff, diff))
    count = int(np.count_nonzero(dist <= eps))
    return count, count / stats.k


def local_rate(stats: BlockStats, x, eps: float) -> float:
    """-(1/n) log of the ball mass; +inf sentinel when the ball is empty."""
    count, mass = ball_mass(stats, x, eps)
    if count == 0:
        return np.inf
    return (-np.log(mass) / stats.n) + 0.0
