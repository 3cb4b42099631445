"""Accuracy radii: weak variance, norm expectations, and oracle epsilon.

The guaranteed slab radius scales like

    epsilon = (c / sqrt(N)) * max(E||Y_N||, E||G|| + R * sqrt(ln(2/delta)))

where G is the centered Gaussian with the data covariance, Y_N is the
symmetrized empirical process sum_i eps_i (X_i - mu) / sqrt(N), and R is
the weak variance sup_t sqrt(t' Sigma t) over the dual ball.  The two
expectations have no closed form for general norms, so they are
estimated by seeded Monte Carlo with a reported standard error.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import NamedTuple

import numpy as np

from normest.blocks import as_sample
from normest.norms import FunctionalSet, norm_eval_many

_MC_ELEMENT_CAP = 2**22  # elements per scratch matrix in a Monte Carlo chunk


@dataclass(frozen=True, eq=False)
class CovarianceModel:
    """A covariance matrix plus where it came from (known vs plug-in)."""

    sigma: np.ndarray
    source: str = "true"

    def __post_init__(self):
        s = np.ascontiguousarray(self.sigma, dtype=np.float64)
        if s.ndim != 2 or s.shape[0] != s.shape[1] or s.shape[0] == 0:
            raise ValueError(f"covariance must be square, got shape {np.shape(self.sigma)}")
        if not np.all(np.isfinite(s)):
            raise ValueError("covariance contains non-finite values")
        scale = max(1.0, float(np.abs(s).max()))
        if np.abs(s - s.T).max() > 1e-10 * scale:
            raise ValueError("covariance must be symmetric")
        s = 0.5 * (s + s.T)
        if np.linalg.eigvalsh(s).min() < -1e-10 * scale:
            raise ValueError("covariance must be positive semidefinite")
        if self.source not in ("true", "plugin"):
            raise ValueError(f"covariance source must be 'true' or 'plugin', got {self.source!r}")
        s.setflags(write=False)
        object.__setattr__(self, "sigma", s)

    @property
    def d(self) -> int:
        return self.sigma.shape[0]

    @classmethod
    def plug_in(cls, sample) -> "CovarianceModel":
        sample = as_sample(sample)
        if sample.N < 2:
            raise ValueError("plug-in covariance needs at least 2 samples")
        return cls(np.cov(sample.data, rowvar=False).reshape(sample.d, sample.d), source="plugin")


@dataclass(frozen=True)
class BoundInputs:
    """Ingredients of the oracle radius; all scales are nonnegative."""

    e_yn: float
    e_g: float
    r_weak: float
    N: int
    delta: float
    c: float = 1.0

    def __post_init__(self):
        for name in ("e_yn", "e_g", "r_weak"):
            v = getattr(self, name)
            if not (np.isfinite(v) and v >= 0.0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if self.N < 1:
            raise ValueError(f"sample size must be >= 1, got {self.N}")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if not (self.c > 0.0 and np.isfinite(self.c)):
            raise ValueError(f"constant c must be positive and finite, got {self.c}")


class MonteCarloEstimate(NamedTuple):
    value: float
    stderr: float
    trials: int
    plugin_mean: bool = False


def _cholesky_factor(sigma: np.ndarray) -> np.ndarray:
    trace = float(np.trace(sigma))
    if trace <= 0.0:
        return np.zeros_like(sigma)
    try:
        return np.linalg.cholesky(sigma)
    except np.linalg.LinAlgError:
        # semidefinite matrices fail strict Cholesky; a trace-relative jitter fixes rank deficiency
        jitter = 1e-12 * trace
        return np.linalg.cholesky(sigma + jitter * np.eye(sigma.shape[0]))


def weak_variance_R(cov: CovarianceModel, fs: FunctionalSet) -> float:
    """sup over the dual ball of sqrt(t' Sigma t).

    Exact coordinate duals reduce to the largest diagonal standard
    deviation; the Euclidean ball gives the top eigenvalue; any other
    family is evaluated on its representatives (signs cancel in the
    quadratic form).
    """
    if cov.d != fs.d:
        raise ValueError(f"covariance in R^{cov.d} does not match functionals in R^{fs.d}")
    if fs.kind == "linf" and fs.exact:
        return float(np.sqrt(np.diag(cov.sigma).max()))
    if fs.kind == "l2":
        return float(np.sqrt(max(np.linalg.eigvalsh(cov.sigma)[-1], 0.0)))
    quad = np.einsum("kd,de,ke->k", fs.vectors, cov.sigma, fs.vectors)
    return float(np.sqrt(max(quad.max(), 0.0)))


def gaussian_norm_expectation(
    cov: CovarianceModel, fs: FunctionalSet, trials: int = 10000, seed=0
) -> MonteCarloEstimate:
    """Monte Carlo E||G|| for G ~ N(0, Sigma), norm taken through fs."""
    if trials < 2:
        raise ValueError(f"need at least 2 Monte Carlo trials, got {trials}")
    if cov.d != fs.d:
        raise ValueError(f"covariance in R^{cov.d} does not match functionals in R^{fs.d}")
    L = _cholesky_factor(cov.sigma)
    rng = np.random.default_rng(seed)
    chunk = min(8192, max(1, _MC_ELEMENT_CAP // fs.size))
    vals = np.empty(trials)
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        g = rng.standard_normal((c, cov.d)) @ L.T
        vals[done : done + c] = norm_eval_many(g, fs)
        done += c
    return MonteCarloEstimate(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(trials)),
        trials=trials,
    )


def rademacher_norm_expectation(
    sample, mu: np.ndarray | None, fs: FunctionalSet, trials: int = 10000, seed=0
) -> MonteCarloEstimate:
    """Monte Carlo E||sum_i eps_i (X_i - mu) / sqrt(N)|| on a fixed sample.

    Passing mu=None centers at the sample mean and flags the result as a
    plug-in estimate.
    """
    if trials < 2:
        raise ValueError(f"need at least 2 Monte Carlo trials, got {trials}")
    sample = as_sample(sample)
    plugin = mu is None
    center = sample.data.mean(axis=0) if plugin else np.asarray(mu, dtype=np.float64)
    if center.shape != (sample.d,):
        raise ValueError(f"mu of shape {center.shape} does not match sample in R^{sample.d}")
    if sample.d != fs.d:
        raise ValueError(f"sample in R^{sample.d} does not match functionals in R^{fs.d}")
    centered = (sample.data - center) / math.sqrt(sample.N)
    rng = np.random.default_rng(seed)
    chunk = min(1024, max(1, _MC_ELEMENT_CAP // max(sample.N, fs.size)))
    vals = np.empty(trials)
    done = 0
    while done < trials:
        c = min(chunk, trials - done)
        signs = 2.0 * rng.integers(0, 2, size=(c, sample.N)).astype(np.float64) - 1.0
        vals[done : done + c] = norm_eval_many(signs @ centered, fs)
        done += c
    return MonteCarloEstimate(
        value=float(vals.mean()),
        stderr=float(vals.std(ddof=1) / math.sqrt(trials)),
        trials=trials,
        plugin_mean=plugin,
    )


def oracle_epsilon(inputs: BoundInputs) -> float:
    """Guaranteed slab radius from the two-regime bound."""
    tail = inputs.e_g + inputs.r_weak * math.sqrt(math.log(2.0 / inputs.delta))
    return inputs.c / math.sqrt(inputs.N) * max(inputs.e_yn, tail)


def euclidean_bound(cov: CovarianceModel, N: int, delta: float, c: float = 1.0) -> float:
    """Closed-form radius for the Euclidean norm: trace and top-eigenvalue terms."""
    if N < 1:
        raise ValueError(f"sample size must be >= 1, got {N}")
    if not (0.0 < delta < 1.0):
        raise ValueError(f"delta must be in (0, 1), got {delta}")
    if not (c > 0.0 and np.isfinite(c)):
        raise ValueError(f"constant c must be positive and finite, got {c}")
    evs = np.linalg.eigvalsh(cov.sigma)
    trace = float(np.clip(evs, 0.0, None).sum())
    lmax = float(max(evs[-1], 0.0))
    return c / math.sqrt(N) * (math.sqrt(trace) + math.sqrt(lmax * math.log(2.0 / delta)))


class EtaScales(NamedTuple):
    eta0: float
    eta1: float
    eta2: float


def uniform_eta_recipe(
    cov: CovarianceModel,
    fs: FunctionalSet,
    N: int,
    n: int,
    trials: int = 10000,
    seed=0,
    c0: float = 1.0,
    c1: float = 1.0,
    c4: float = 1.0,
    e_yn: float | None = None,
) -> EtaScales:
    """The three scales of the uniform block-mean concentration radius.

    eta0 = c0 * R * sqrt(n / N)          per-functional block-mean scatter
    eta1 = c1 * E||G|| / sqrt(n)         net coarseness
    eta2 = c4 * max(E||Y_N||, E||G||) / sqrt(N)   process tail

    E||Y_N|| defaults to the Gaussian proxy E||G|| (its large-N limit);
    pass e_yn to override with a sample-based estimate.
    """
    if N < 1 or n < 1 or n > N:
        raise ValueError(f"need 1 <= n <= N, got n={n}, N={N}")
    r = weak_variance_R(cov, fs)
    e_g = gaussian_norm_expectation(cov, fs, trials=trials, seed=seed).value
    base = e_g if e_yn is None else max(e_yn, e_g)
    return EtaScales(
        eta0=c0 * r * math.sqrt(n / N),
        eta1=c1 * e_g / math.sqrt(n),
        eta2=c4 * base / math.sqrt(N),
    )
