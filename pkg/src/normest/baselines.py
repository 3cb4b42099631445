"""Classical mean estimators the slab construction is benchmarked against."""

from __future__ import annotations

import warnings

import numpy as np

from normest.blocks import as_sample, block_means, partition


def empirical_mean(sample) -> np.ndarray:
    sample = as_sample(sample)
    return sample.data.mean(axis=0)


def coordinatewise_mom(sample, n: int) -> np.ndarray:
    """Scalar median-of-means applied to each coordinate, shared partition."""
    sample = as_sample(sample)
    blocks = block_means(sample, partition(sample.N, n))
    return np.median(blocks.means, axis=0)


def geometric_mom(
    sample, n: int, weiszfeld_tol: float = 1e-10, max_iter: int = 1000
) -> np.ndarray:
    """Geometric median of the block means, by Weiszfeld iteration.

    Denominators are floored at 1e-12 times the mean pairwise distance of
    the block means, which keeps iterates finite when one lands exactly
    on a block mean.  Convergence is a relative step criterion against
    the spread of the block means.
    """
    sample = as_sample(sample)
    z = block_means(sample, partition(sample.N, n)).means
    if n == 1:
        return z[0].copy()
    diffs = z[:, None, :] - z[None, :, :]
    dist = np.sqrt((diffs**2).sum(axis=-1))
    spread = float(dist.max())
    if spread == 0.0:
        return z[0].copy()
    off_diag = dist[~np.eye(n, dtype=bool)]
    floor = 1e-12 * float(off_diag.mean())
    y = z.mean(axis=0)
    for _ in range(max_iter):
        dy = np.sqrt(((z - y) ** 2).sum(axis=1))
        w = 1.0 / np.maximum(dy, floor)
        y_next = (w @ z) / w.sum()
        step = float(np.sqrt(((y_next - y) ** 2).sum()))
        y = y_next
        if step < weiszfeld_tol * spread:
            return y
    warnings.warn(
        f"Weiszfeld iteration did not reach tolerance in {max_iter} steps", stacklevel=2
    )
    return y
