"""Sample container, block partitioning, and the scalar median-of-means."""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True, eq=False)
class SampleMatrix:
    """N observations of a d-dimensional random vector, one per row."""

    data: np.ndarray

    def __post_init__(self):
        a = np.ascontiguousarray(self.data, dtype=np.float64)
        if a.ndim == 1:
            a = a[:, None]
        if a.ndim != 2 or a.shape[0] == 0 or a.shape[1] == 0:
            raise ValueError(f"sample must be a nonempty 2-D array, got shape {np.shape(self.data)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("sample contains non-finite values")
        a.setflags(write=False)
        object.__setattr__(self, "data", a)

    @property
    def N(self) -> int:
        return self.data.shape[0]

    @property
    def d(self) -> int:
        return self.data.shape[1]


def as_sample(x) -> SampleMatrix:
    """Pass a SampleMatrix through, or wrap a raw array."""
    return x if isinstance(x, SampleMatrix) else SampleMatrix(np.asarray(x, dtype=np.float64))


@dataclass(frozen=True, eq=False)
class BlockSummary:
    """n blocks of m indices each; trailing remainder rows are dropped.

    `means` is filled in by block_means; a bare partition leaves it None.
    """

    n: int
    m: int
    dropped: int
    indices: np.ndarray
    means: np.ndarray | None = None

    def __post_init__(self):
        idx = np.asarray(self.indices, dtype=np.int64)
        if idx.shape != (self.n, self.m):
            raise ValueError(f"indices shape {idx.shape} does not match n={self.n}, m={self.m}")
        object.__setattr__(self, "indices", idx)


def partition(N: int, n: int, shuffle_seed: int | None = None) -> BlockSummary:
    """Split indices 0..N-1 into n equal blocks of m = N // n.

    Blocks are contiguous runs unless `shuffle_seed` is given, in which
    case indices are permuted once (seeded) before slicing.  The last
    N - n*m indices are dropped.
    """
    if n < 1:
        raise ValueError(f"block count must be >= 1, got {n}")
    if n > N:
        raise ValueError(f"cannot split {N} samples into {n} blocks")
    m = N // n
    order = np.arange(N, dtype=np.int64)
    if shuffle_seed is not None:
        order = np.random.default_rng(shuffle_seed).permutation(N).astype(np.int64)
    return BlockSummary(n=n, m=m, dropped=N - n * m, indices=order[: n * m].reshape(n, m))


def block_means(sample, skeleton: BlockSummary) -> BlockSummary:
    """Fill in the per-block means of `sample` for an existing partition."""
    sample = as_sample(sample)
    idx = skeleton.indices
    if idx.size and (idx.min() < 0 or idx.max() >= sample.N):
        raise ValueError("partition indices out of range for this sample")
    means = sample.data[idx].mean(axis=1)
    return BlockSummary(
        n=skeleton.n, m=skeleton.m, dropped=skeleton.dropped, indices=idx, means=means
    )


def scalar_mom(values: np.ndarray, n: int) -> float:
    """Median of the n block means of a 1-D sample."""
    values = np.asarray(values, dtype=np.float64)
    if values.ndim != 1 or values.size == 0:
        raise ValueError("scalar_mom expects a nonempty 1-D array")
    bm = block_means(SampleMatrix(values[:, None]), partition(values.size, n))
    return float(np.median(bm.means[:, 0]))


def blocks_for_confidence(delta: float, N: int, kappa: float = 1.0) -> int:
    """Block count ceil(kappa * ln(2/delta)), clamped to [1, N].

    Clamping to N (the all-singleton partition) is the graceful floor for
    very small delta; a warning flags that the requested confidence is
    not actually attainable with N samples.
    """
    if not (0.0 < delta < 1.0):
        raise ValueError(f"confidence level delta must be in (0, 1), got {delta}")
    if N < 1:
        raise ValueError(f"sample size must be >= 1, got {N}")
    if not (kappa > 0.0 and math.isfinite(kappa)):
        raise ValueError(f"kappa must be positive and finite, got {kappa}")
    raw = math.ceil(kappa * math.log(2.0 / delta))
    if raw > N:
        warnings.warn(
            f"confidence delta={delta} asks for {raw} blocks but only {N} samples "
            "are available; clamping to singleton blocks",
            stacklevel=2,
        )
    return min(N, max(1, raw))
