"""Synthetic data generators and the Monte Carlo benchmark harness.

Every trial draws a fresh sample from a fixed distribution, runs the
requested estimators, and measures each error through the study norm's
functional family.  Seeding is hierarchical: trial i uses the seed
sequence (master_seed, 0, i) and infrastructure draws (norm nets, bound
Monte Carlo, surrogate samples) use (master_seed, 1, tag), so reports
are byte-identical for a given config at any thread count.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from normest.baselines import coordinatewise_mom, empirical_mean, geometric_mom
from normest.blocks import SampleMatrix, blocks_for_confidence
from normest.bounds import (
    BoundInputs,
    CovarianceModel,
    _cholesky_factor,
    euclidean_bound,
    gaussian_norm_expectation,
    oracle_epsilon,
    rademacher_norm_expectation,
    weak_variance_R,
)
from normest.norms import NormSpec, dual_functionals, norm_eval
from normest.slab import adaptive_estimate, estimate_mean

_DIST_KINDS = ("gaussian", "student_t", "pareto_sym", "lognormal", "chebyshev_sharp")
_ESTIMATORS = ("empirical", "cw_mom", "geo_mom", "slab")
_SLAB_MODES = ("adaptive", "fixed", "oracle")


@dataclass(frozen=True, eq=False)
class DistributionSpec:
    """A named family with known mean and covariance.

    kinds: gaussian (full covariance), student_t (dof > 2, per-coordinate
    scale), pareto_sym (symmetrized, tail index alpha > 2), lognormal
    (centered, log-scale sigma_log), chebyshev_sharp (three-point family
    that makes the empirical mean's Chebyshev rate tight: 0 with
    probability 1 - delta', +-scale/sqrt(delta') otherwise, where
    delta' = 2 * delta / N at sampling time).
    """

    kind: str
    mu: np.ndarray
    sigma: np.ndarray | None = None
    dof: float | None = None
    scale: float | np.ndarray | None = None
    alpha: float | None = None
    sigma_log: float | None = None
    delta: float | None = None

    def __post_init__(self):
        if self.kind not in _DIST_KINDS:
            raise ValueError(f"unknown distribution kind {self.kind!r}, expected one of {_DIST_KINDS}")
        mu = np.asarray(self.mu, dtype=np.float64)
        if mu.ndim != 1 or mu.size == 0 or not np.all(np.isfinite(mu)):
            raise ValueError("mu must be a finite 1-D vector")
        object.__setattr__(self, "mu", mu)
        allowed = {
            "gaussian": {"sigma"},
            "student_t": {"dof", "scale"},
            "pareto_sym": {"alpha", "scale"},
            "lognormal": {"sigma_log"},
            "chebyshev_sharp": {"delta", "scale"},
        }[self.kind]
        for name in ("sigma", "dof", "scale", "alpha", "sigma_log", "delta"):
            if getattr(self, name) is not None and name not in allowed:
                raise ValueError(f"field {name!r} is not used by kind {self.kind!r}")
        if self.kind == "gaussian":
            if self.sigma is None:
                raise ValueError("gaussian needs a covariance matrix")
            cov = CovarianceModel(self.sigma)
            if cov.d != mu.size:
                raise ValueError("covariance dimension does not match mu")
            object.__setattr__(self, "sigma", cov.sigma)
        elif self.kind == "student_t":
            if self.dof is None or not (self.dof > 2.0 and np.isfinite(self.dof)):
                raise ValueError("student_t needs dof > 2 for a finite covariance")
            object.__setattr__(self, "scale", self._positive_scale(vector_ok=True))
        elif self.kind == "pareto_sym":
            if self.alpha is None or not (self.alpha > 2.0 and np.isfinite(self.alpha)):
                raise ValueError("pareto_sym needs tail index alpha > 2")
            object.__setattr__(self, "scale", self._positive_scale(vector_ok=False))
        elif self.kind == "lognormal":
            if self.sigma_log is None or not (self.sigma_log > 0.0 and np.isfinite(self.sigma_log)):
                raise ValueError("lognormal needs sigma_log > 0")
        else:
            if self.delta is None or not (0.0 < self.delta < 1.0):
                raise ValueError("chebyshev_sharp needs delta in (0, 1)")
            object.__setattr__(self, "scale", self._positive_scale(vector_ok=False))

    def _positive_scale(self, vector_ok: bool):
        s = self.scale if self.scale is not None else 1.0
        if vector_ok and np.ndim(s) == 1:
            arr = np.asarray(s, dtype=np.float64)
            if arr.size != self.mu.size or not np.all(np.isfinite(arr)) or np.any(arr <= 0):
                raise ValueError("per-coordinate scale must be positive and match mu")
            return arr
        s = float(s)
        if not (s > 0.0 and np.isfinite(s)):
            raise ValueError(f"scale must be positive and finite, got {s}")
        return s

    @property
    def d(self) -> int:
        return self.mu.size

    def covariance(self) -> np.ndarray:
        d = self.d
        if self.kind == "gaussian":
            return self.sigma
        if self.kind == "student_t":
            var = np.broadcast_to(np.square(self.scale), (d,)) * self.dof / (self.dof - 2.0)
            return np.diag(var.astype(np.float64))
        if self.kind == "pareto_sym":
            a = self.alpha
            var = self.scale**2 * a / ((a - 1.0) ** 2 * (a - 2.0))
            return var * np.eye(d)
        if self.kind == "lognormal":
            s2 = self.sigma_log**2
            return (math.exp(s2) - 1.0) * math.exp(s2) * np.eye(d)
        return self.scale**2 * np.eye(d)

    def sample(self, N: int, rng: np.random.Generator) -> np.ndarray:
        d = self.d
        if self.kind == "gaussian":
            return self.mu + rng.standard_normal((N, d)) @ _cholesky_factor(self.sigma).T
        if self.kind == "student_t":
            return self.mu + self.scale * rng.standard_t(self.dof, size=(N, d))
        if self.kind == "pareto_sym":
            p = rng.pareto(self.alpha, size=(N, d)) + 1.0
            signs = 2.0 * rng.integers(0, 2, size=(N, d)).astype(np.float64) - 1.0
            return self.mu + self.scale * signs * (p - self.alpha / (self.alpha - 1.0))
        if self.kind == "lognormal":
            shift = math.exp(self.sigma_log**2 / 2.0)
            return self.mu + rng.lognormal(0.0, self.sigma_log, size=(N, d)) - shift
        dprime = min(1.0, 2.0 * self.delta / N)
        spike = self.scale / math.sqrt(dprime)
        hits = rng.random((N, d)) < dprime
        signs = 2.0 * rng.integers(0, 2, size=(N, d)).astype(np.float64) - 1.0
        return self.mu + np.where(hits, signs * spike, 0.0)

    def to_dict(self) -> dict:
        def opt(v):
            if v is None:
                return None
            if isinstance(v, np.ndarray):
                return v.tolist()
            return float(v)

        return {
            "kind": self.kind,
            "mu": self.mu.tolist(),
            "sigma": opt(self.sigma),
            "dof": opt(self.dof),
            "scale": opt(self.scale),
            "alpha": opt(self.alpha),
            "sigma_log": opt(self.sigma_log),
            "delta": opt(self.delta),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "DistributionSpec":
        return cls(
            kind=d["kind"],
            mu=np.asarray(d["mu"], dtype=np.float64),
            sigma=None if d.get("sigma") is None else np.asarray(d["sigma"], dtype=np.float64),
            dof=d.get("dof"),
            scale=d.get("scale"),
            alpha=d.get("alpha"),
            sigma_log=d.get("sigma_log"),
            delta=d.get("delta"),
        )


def sample_distribution(spec: DistributionSpec, N: int, seed) -> SampleMatrix:
    """Draw N rows from the family, deterministically under `seed`."""
    if N < 1:
        raise ValueError(f"sample size must be >= 1, got {N}")
    return SampleMatrix(spec.sample(N, np.random.default_rng(seed)))


@dataclass(frozen=True, eq=False)
class ExperimentConfig:
    """One benchmark run: a distribution, a norm, and estimator settings."""

    distribution: DistributionSpec
    d: int
    N: int
    trials: int
    delta: float
    norm: NormSpec
    budget: int = 4096
    c: float = 1.0
    estimators: tuple = ("empirical", "cw_mom", "geo_mom", "slab")
    master_seed: int = 0
    slab_mode: str = "adaptive"
    epsilon: float | None = None
    eps_tol: float = 1e-3
    kappa: float = 1.0
    bound_trials: int = 10000

    def __post_init__(self):
        if self.d != self.distribution.d:
            raise ValueError(f"config d={self.d} does not match distribution in R^{self.distribution.d}")
        if self.N < 1 or self.trials < 1:
            raise ValueError("N and trials must be >= 1")
        if not (0.0 < self.delta < 1.0):
            raise ValueError(f"delta must be in (0, 1), got {self.delta}")
        if self.budget < 1 or self.bound_trials < 2:
            raise ValueError("budget must be >= 1 and bound_trials >= 2")
        est = tuple(self.estimators)
        if not est or any(e not in _ESTIMATORS for e in est) or len(set(est)) != len(est):
            raise ValueError(f"estimators must be distinct names from {_ESTIMATORS}, got {est}")
        object.__setattr__(self, "estimators", est)
        if self.slab_mode not in _SLAB_MODES:
            raise ValueError(f"slab_mode must be one of {_SLAB_MODES}, got {self.slab_mode!r}")
        if self.slab_mode == "fixed":
            if self.epsilon is None or not (self.epsilon > 0.0 and np.isfinite(self.epsilon)):
                raise ValueError("fixed slab mode needs epsilon > 0")
        elif self.epsilon is not None:
            raise ValueError(f"epsilon is only used in fixed mode, not {self.slab_mode!r}")
        if not (self.eps_tol > 0.0 and self.kappa > 0.0):
            raise ValueError("eps_tol and kappa must be > 0")

    def to_dict(self) -> dict:
        return {
            "distribution": self.distribution.to_dict(),
            "d": self.d,
            "N": self.N,
            "trials": self.trials,
            "delta": self.delta,
            "norm": {
                "kind": self.norm.kind,
                "p": self.norm.p,
                "custom_functionals": None
                if self.norm.custom_functionals is None
                else self.norm.custom_functionals.tolist(),
            },
            "budget": self.budget,
            "c": self.c,
            "estimators": list(self.estimators),
            "master_seed": self.master_seed,
            "slab_mode": self.slab_mode,
            "epsilon": self.epsilon,
            "eps_tol": self.eps_tol,
            "kappa": self.kappa,
            "bound_trials": self.bound_trials,
        }

    @classmethod
    def from_dict(cls, cfg: dict) -> "ExperimentConfig":
        norm = cfg.get("norm", {})
        custom = norm.get("custom_functionals")
        spec = NormSpec(
            kind=norm["kind"],
            p=norm.get("p"),
            custom_functionals=None if custom is None else np.asarray(custom, dtype=np.float64),
        )
        kwargs = {}
        for key in (
            "budget", "c", "master_seed", "slab_mode", "epsilon",
            "eps_tol", "kappa", "bound_trials",
        ):
            if cfg.get(key) is not None:
                kwargs[key] = cfg[key]
        if cfg.get("estimators") is not None:
            kwargs["estimators"] = tuple(cfg["estimators"])
        return cls(
            distribution=DistributionSpec.from_dict(cfg["distribution"]),
            d=cfg["d"],
            N=cfg["N"],
            trials=cfg["trials"],
            delta=cfg["delta"],
            norm=spec,
            **kwargs,
        )


def _order_statistic(sorted_vals: np.ndarray, level: float) -> float:
    # rank ceil(level * trials), 1-indexed; the nudge guards float products
    # like 0.99 * 100 that land a hair above the intended integer
    rank = math.ceil(level * sorted_vals.size - 1e-9)
    rank = min(max(rank, 1), sorted_vals.size)
    return float(sorted_vals[rank - 1])


def _quantile_levels(delta: float) -> list[float]:
    return sorted({0.5, 0.9, 0.99, 1.0 - delta})


def _run_trial(i: int, config: ExperimentConfig, fs, eps_fixed: float | None) -> dict:
    seed = np.random.SeedSequence((config.master_seed, 0, i))
    sample = sample_distribution(config.distribution, config.N, seed)
    mu = config.distribution.mu
    n = blocks_for_confidence(config.delta, config.N, config.kappa)
    out = {}
    for name in config.estimators:
        try:
            if name == "empirical":
                err = norm_eval(empirical_mean(sample) - mu, fs)
                out[name] = {"error": err}
            elif name == "cw_mom":
                err = norm_eval(coordinatewise_mom(sample, n) - mu, fs)
                out[name] = {"error": err}
            elif name == "geo_mom":
                err = norm_eval(geometric_mom(sample, n) - mu, fs)
                out[name] = {"error": err}
            else:
                if config.slab_mode == "adaptive":
                    res = adaptive_estimate(
                        sample, config.norm, config.delta,
                        eps_tol=config.eps_tol, kappa=config.kappa, functionals=fs,
                    )
                else:
                    res = estimate_mean(
                        sample, config.norm, config.delta, eps_fixed,
                        kappa=config.kappa, functionals=fs,
                    )
                err = norm_eval(res.point - mu, fs) if res.feasible else math.inf
                out[name] = {
                    "error": err,
                    "feasible": res.feasible,
                    "epsilon_used": res.epsilon_used,
                }
        except Exception:
            out[name] = {"error": math.inf, "feasible": False}
    return out


def run_experiment(config: ExperimentConfig, threads: int = 1) -> dict:
    """Run all trials and aggregate error quantiles per estimator.

    The returned report is a plain dict ready for stable serialization;
    failed trials count as +inf error and are tallied per estimator.
    """
    d = config.d
    fs = dual_functionals(config.norm, d, config.budget, seed=config.master_seed)
    n = blocks_for_confidence(config.delta, config.N, config.kappa)
    m = config.N // n
    cov = CovarianceModel(config.distribution.covariance())
    mu = config.distribution.mu

    e_g = gaussian_norm_expectation(
        cov, fs, trials=config.bound_trials, seed=np.random.SeedSequence((config.master_seed, 1, 1))
    )
    surrogate = sample_distribution(
        config.distribution, config.N, np.random.SeedSequence((config.master_seed, 1, 2))
    )
    e_yn = rademacher_norm_expectation(
        surrogate, mu, fs, trials=config.bound_trials,
        seed=np.random.SeedSequence((config.master_seed, 1, 3)),
    )
    r_weak = weak_variance_R(cov, fs)
    eps_oracle = oracle_epsilon(
        BoundInputs(e_yn=e_yn.value, e_g=e_g.value, r_weak=r_weak, N=config.N,
                    delta=config.delta, c=config.c)
    )
    bounds_section = {
        "e_g": e_g.value,
        "e_g_stderr": e_g.stderr,
        "e_yn": e_yn.value,
        "e_yn_stderr": e_yn.stderr,
        "r_weak": r_weak,
        "epsilon_oracle": eps_oracle,
        "euclidean_epsilon": euclidean_bound(cov, config.N, config.delta, config.c)
        if config.norm.kind == "l2"
        else None,
    }
    eps_fixed = config.epsilon if config.slab_mode == "fixed" else eps_oracle

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            trial_results = list(
                pool.map(lambda i: _run_trial(i, config, fs, eps_fixed), range(config.trials))
            )
    else:
        trial_results = [_run_trial(i, config, fs, eps_fixed) for i in range(config.trials)]

    levels = _quantile_levels(config.delta)
    estimators = {}
    for name in config.estimators:
        errs = np.array([t[name]["error"] for t in trial_results])
        sorted_errs = np.sort(errs)
        entry = {
            "mean_error": float(errs.mean()),
            "quantiles": [_order_statistic(sorted_errs, lv) for lv in levels],
            "failures": int(np.count_nonzero(~np.isfinite(errs))),
        }
        if name == "slab":
            feas = np.array([bool(t[name].get("feasible", False)) for t in trial_results])
            eps_used = np.array(
                [t[name].get("epsilon_used", math.nan) for t in trial_results]
            )
            eps_ok = eps_used[np.isfinite(eps_used)]
            entry["feasible_rate"] = float(feas.mean())
            entry["epsilon_used"] = {
                "mean": float(eps_ok.mean()) if eps_ok.size else math.nan,
                "min": float(eps_ok.min()) if eps_ok.size else math.nan,
                "max": float(eps_ok.max()) if eps_ok.size else math.nan,
            }
        estimators[name] = entry

    from normest import __version__

    return {
        "version": __version__,
        "config": config.to_dict(),
        "blocks": {"n": n, "m": m, "dropped": config.N - n * m},
        "functional_count": fs.size,
        "functionals_exact": fs.exact,
        "quantile_levels": levels,
        "bounds": bounds_section,
        "estimators": estimators,
    }
