"""Uniform median-of-means certification.

The slab construction is sound when, simultaneously for every dual
functional, at least 60% of the blocks have their projected mean within
r of the projected true mean.  certify_uniform checks that event on a
concrete sample; finite_class_accuracy sizes the radius for a finite
functional class via a Chebyshev argument.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from normest.blocks import as_sample, block_means, partition
from normest.norms import FunctionalSet


def _required_blocks(n: int) -> int:
    # ceil(0.6 n) in integer arithmetic
    return (3 * n + 4) // 5


@dataclass(frozen=True, eq=False)
class CertificationReport:
    r: float
    n: int
    required: int
    per_functional_coverage: np.ndarray
    min_coverage: int
    passed: bool


def certify_uniform(
    sample, fs: FunctionalSet, true_mu: np.ndarray, r: float, n: int
) -> CertificationReport:
    """Count, per functional, blocks whose projected mean is within r of mu."""
    sample = as_sample(sample)
    mu = np.asarray(true_mu, dtype=np.float64)
    if mu.shape != (sample.d,):
        raise ValueError(f"mu of shape {mu.shape} does not match sample in R^{sample.d}")
    if sample.d != fs.d:
        raise ValueError(f"sample in R^{sample.d} does not match functionals in R^{fs.d}")
    if not (np.isfinite(r) and r >= 0.0):
        raise ValueError(f"radius must be finite and >= 0, got {r}")
    blocks = block_means(sample, partition(sample.N, n))
    proj = blocks.means @ fs.vectors.T
    target = fs.vectors @ mu
    coverage = (np.abs(proj - target[None, :]) <= r).sum(axis=0).astype(np.int64)
    required = _required_blocks(n)
    min_cov = int(coverage.min())
    return CertificationReport(
        r=float(r),
        n=n,
        required=required,
        per_functional_coverage=coverage,
        min_coverage=min_cov,
        passed=(min_cov >= required),
    )


@dataclass(frozen=True)
class FiniteClassBound:
    """Smallest admissible eta0 for a finite functional class, if any."""

    accepted: bool
    eta0: float
    k: int | None
    chebyshev_bound: float | None
    slack: float | None


_K_START = 20
_K_CAP = 10**6


def finite_class_accuracy(
    class_size: int, max_std: float, n: int, m: int, c2: float = 1.0
) -> FiniteClassBound:
    """Size eta0 = max_std * sqrt(k / m) for the smallest admissible k.

    A block mean of m points misses its target by eta0 with probability
    at most 1/k (Chebyshev), and k is admissible when the class is small
    enough: ln(class_size) <= c2 * n * ln(e * k).  k runs over the
    geometric grid 20, 40, 80, ... up to 10^6; if no k on the grid
    admits the class the bound is rejected rather than extrapolated.
    """
    if class_size < 1:
        raise ValueError(f"class size must be >= 1, got {class_size}")
    if m < 1:
        raise ValueError(f"block size must be >= 1, got {m}")
    if n < 0:
        raise ValueError(f"block count must be >= 0, got {n}")
    if not (np.isfinite(max_std) and max_std >= 0.0):
        raise ValueError(f"max_std must be finite and >= 0, got {max_std}")
    k = _K_START
    while k <= _K_CAP:
        budget = c2 * n * math.log(math.e * k)
        need = math.log(class_size)
        if need <= budget:
            return FiniteClassBound(
                accepted=True,
                eta0=max_std * math.sqrt(k / m),
                k=k,
                chebyshev_bound=1.0 / k,
                slack=budget - need,
            )
        k *= 2
    return FiniteClassBound(accepted=False, eta0=math.inf, k=None, chebyshev_bound=None, slack=None)
