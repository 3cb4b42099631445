import math

import numpy as np
import pytest

from normest.bounds import CovarianceModel, gaussian_norm_expectation
from normest.dataio import dumps_stable
from normest.harness import (
    DistributionSpec,
    ExperimentConfig,
    _order_statistic,
    run_experiment,
    sample_distribution,
)
from normest.norms import NormSpec, dual_functionals


def _gauss(d=2, var=1.0):
    return DistributionSpec("gaussian", mu=np.zeros(d), sigma=var * np.eye(d))


class TestDistributionSpec:
    def test_sampling_is_bitwise_deterministic(self):
        dist = DistributionSpec("student_t", mu=np.array([1.0, -1.0]), dof=3.0, scale=2.0)
        a = sample_distribution(dist, 50, seed=7).data
        b = sample_distribution(dist, 50, seed=7).data
        c = sample_distribution(dist, 50, seed=8).data
        assert np.array_equal(a, b)
        assert not np.array_equal(a, c)

    def test_zero_covariance_gaussian_is_point_mass(self):
        dist = DistributionSpec("gaussian", mu=np.array([2.0, 3.0]), sigma=np.zeros((2, 2)))
        x = sample_distribution(dist, 10, seed=0).data
        assert np.array_equal(x, np.tile([2.0, 3.0], (10, 1)))

    def test_gaussian_sample_covariance_matches(self):
        sigma = np.array([[2.0, 0.8], [0.8, 1.0]])
        dist = DistributionSpec("gaussian", mu=np.zeros(2), sigma=sigma)
        x = sample_distribution(dist, 100000, seed=1).data
        assert np.allclose(np.cov(x, rowvar=False), sigma, atol=0.05)

    def test_student_t_moments(self):
        dof, scale = 6.0, 1.5
        dist = DistributionSpec("student_t", mu=np.full(1, 4.0), dof=dof, scale=scale)
        x = sample_distribution(dist, 400000, seed=2).data[:, 0]
        want_var = scale**2 * dof / (dof - 2.0)
        assert x.mean() == pytest.approx(4.0, abs=0.02)
        assert x.var() == pytest.approx(want_var, rel=0.1)
        assert np.allclose(np.diag(dist.covariance()), want_var)

    def test_pareto_sym_moments(self):
        alpha = 6.0
        dist = DistributionSpec("pareto_sym", mu=np.zeros(1), alpha=alpha, scale=2.0)
        x = sample_distribution(dist, 10**6, seed=3).data[:, 0]
        want_var = 4.0 * alpha / ((alpha - 1.0) ** 2 * (alpha - 2.0))
        assert x.mean() == pytest.approx(0.0, abs=5 * math.sqrt(want_var / 10**6))
        assert x.var() == pytest.approx(want_var, rel=0.1)
        assert dist.covariance()[0, 0] == pytest.approx(want_var, rel=1e-12)

    def test_pareto_sym_is_symmetric_about_mu(self):
        dist = DistributionSpec("pareto_sym", mu=np.zeros(1), alpha=3.0)
        x = sample_distribution(dist, 200000, seed=4).data[:, 0]
        # sign of the deviation is an independent fair coin
        assert abs((x > 0).mean() - 0.5) < 0.01

    def test_lognormal_moments(self):
        s = 0.5
        dist = DistributionSpec("lognormal", mu=np.zeros(1), sigma_log=s)
        x = sample_distribution(dist, 400000, seed=5).data[:, 0]
        want_var = (math.exp(s * s) - 1.0) * math.exp(s * s)
        assert x.mean() == pytest.approx(0.0, abs=0.01)
        assert x.var() == pytest.approx(want_var, rel=0.1)

    def test_chebyshev_sharp_support_and_variance(self):
        # support is {0, +-scale/sqrt(2 delta / N)}; pooled over many draws
        # the variance works out to scale^2 regardless of N
        delta, N = 0.3, 50
        dist = DistributionSpec("chebyshev_sharp", mu=np.zeros(1), delta=delta)
        spike = 1.0 / math.sqrt(2 * delta / N)
        pooled = np.concatenate(
            [sample_distribution(dist, N, seed=(6, i)).data[:, 0] for i in range(2000)]
        )
        values = set(np.unique(pooled))
        assert values <= {0.0, spike, -spike}
        assert pooled.var() == pytest.approx(1.0, rel=0.15)
        assert dist.covariance()[0, 0] == 1.0

    def test_dict_round_trip(self):
        dist = DistributionSpec("pareto_sym", mu=np.array([1.0, 2.0]), alpha=3.5, scale=0.5)
        back = DistributionSpec.from_dict(dist.to_dict())
        assert back.kind == dist.kind
        assert np.array_equal(back.mu, dist.mu)
        assert back.alpha == dist.alpha and back.scale == dist.scale

    def test_validation(self):
        with pytest.raises(ValueError):
            DistributionSpec("gaussian", mu=np.zeros(2))  # missing sigma
        with pytest.raises(ValueError):
            DistributionSpec("student_t", mu=np.zeros(1), dof=2.0)
        with pytest.raises(ValueError):
            DistributionSpec("pareto_sym", mu=np.zeros(1), alpha=1.5)
        with pytest.raises(ValueError):
            DistributionSpec("chebyshev_sharp", mu=np.zeros(1), delta=1.5)
        with pytest.raises(ValueError):
            DistributionSpec("gaussian", mu=np.zeros(1), sigma=np.eye(1), dof=3.0)
        with pytest.raises(ValueError):
            DistributionSpec("uniform", mu=np.zeros(1))


class TestOrderStatistic:
    def test_exact_ranks(self):
        vals = np.arange(1.0, 101.0)  # sorted 1..100
        assert _order_statistic(vals, 0.5) == 50.0
        assert _order_statistic(vals, 0.99) == 99.0
        assert _order_statistic(vals, 1.0) == 100.0
        assert _order_statistic(vals, 0.001) == 1.0

    def test_no_interpolation(self):
        vals = np.array([1.0, 2.0, 10.0])
        assert _order_statistic(vals, 0.9) == 10.0
        assert _order_statistic(vals, 0.5) == 2.0


class TestExperimentConfig:
    def test_round_trip_through_dict(self):
        cfg = ExperimentConfig(
            distribution=_gauss(2), d=2, N=40, trials=3, delta=0.1,
            norm=NormSpec("lp", p=2.5), budget=128, slab_mode="fixed", epsilon=0.7,
        )
        back = ExperimentConfig.from_dict(cfg.to_dict())
        assert back.to_dict() == cfg.to_dict()

    def test_validation(self):
        with pytest.raises(ValueError):
            ExperimentConfig(distribution=_gauss(2), d=3, N=10, trials=1, delta=0.1,
                             norm=NormSpec("linf"))
        with pytest.raises(ValueError):
            ExperimentConfig(distribution=_gauss(2), d=2, N=10, trials=1, delta=0.1,
                             norm=NormSpec("linf"), estimators=("bogus",))
        with pytest.raises(ValueError):
            ExperimentConfig(distribution=_gauss(2), d=2, N=10, trials=1, delta=0.1,
                             norm=NormSpec("linf"), slab_mode="fixed")
        with pytest.raises(ValueError):
            ExperimentConfig(distribution=_gauss(2), d=2, N=10, trials=1, delta=0.1,
                             norm=NormSpec("linf"), slab_mode="adaptive", epsilon=1.0)


class TestRunExperiment:
    def test_point_mass_gives_zero_errors(self):
        dist = DistributionSpec("gaussian", mu=np.array([1.0, -2.0]), sigma=np.zeros((2, 2)))
        cfg = ExperimentConfig(distribution=dist, d=2, N=30, trials=4, delta=0.1,
                               norm=NormSpec("linf"), bound_trials=100)
        rep = run_experiment(cfg)
        for entry in rep["estimators"].values():
            assert entry["mean_error"] == 0.0
            assert entry["failures"] == 0
            assert all(q == 0.0 for q in entry["quantiles"])
        assert rep["estimators"]["slab"]["feasible_rate"] == 1.0

    def test_report_is_deterministic_and_thread_invariant(self):
        cfg = ExperimentConfig(distribution=_gauss(2), d=2, N=40, trials=10, delta=0.1,
                               norm=NormSpec("l1"), budget=32, bound_trials=200)
        a = dumps_stable(run_experiment(cfg, threads=1))
        b = dumps_stable(run_experiment(cfg, threads=1))
        c = dumps_stable(run_experiment(cfg, threads=4))
        assert a == b == c

    def test_master_seed_changes_results(self):
        base = dict(distribution=_gauss(2), d=2, N=40, trials=10, delta=0.1,
                    norm=NormSpec("linf"), bound_trials=100)
        a = run_experiment(ExperimentConfig(master_seed=0, **base))
        b = run_experiment(ExperimentConfig(master_seed=1, **base))
        assert a["estimators"]["empirical"]["mean_error"] != b["estimators"]["empirical"]["mean_error"]

    def test_quantiles_are_nondecreasing_and_levels_sorted(self):
        cfg = ExperimentConfig(distribution=_gauss(3), d=3, N=60, trials=25, delta=0.05,
                               norm=NormSpec("linf"), bound_trials=100)
        rep = run_experiment(cfg)
        levels = rep["quantile_levels"]
        assert levels == sorted(levels) and 1 - 0.05 in levels
        for entry in rep["estimators"].values():
            qs = entry["quantiles"]
            assert all(x <= y for x, y in zip(qs, qs[1:]))

    def test_infeasible_slab_counts_as_failure(self):
        # spread data with a tiny fixed radius: slab cannot certify, so the
        # error is +inf and the failure tally reflects it
        cfg = ExperimentConfig(distribution=_gauss(2), d=2, N=40, trials=6, delta=0.1,
                               norm=NormSpec("linf"), slab_mode="fixed", epsilon=1e-6,
                               estimators=("empirical", "slab"), bound_trials=100)
        rep = run_experiment(cfg)
        slab = rep["estimators"]["slab"]
        assert slab["feasible_rate"] == 0.0
        assert slab["failures"] == 6
        assert slab["mean_error"] == math.inf
        assert rep["estimators"]["empirical"]["failures"] == 0

    def test_oracle_mode_uses_bound_radius(self):
        cfg = ExperimentConfig(distribution=_gauss(2), d=2, N=60, trials=5, delta=0.05,
                               norm=NormSpec("linf"), slab_mode="oracle",
                               estimators=("slab",), c=2.0, bound_trials=400)
        rep = run_experiment(cfg)
        eps = rep["estimators"]["slab"]["epsilon_used"]
        assert eps["min"] == eps["max"] == rep["bounds"]["epsilon_oracle"]

    def test_adaptive_mode_tracks_sample_scale(self):
        cfg = ExperimentConfig(distribution=_gauss(2), d=2, N=80, trials=5, delta=0.05,
                               norm=NormSpec("linf"), bound_trials=100)
        rep = run_experiment(cfg)
        eps = rep["estimators"]["slab"]["epsilon_used"]
        assert 0 < eps["min"] <= eps["mean"] <= eps["max"] < 10.0

    def test_empirical_mean_error_tracks_gaussian_scale(self):
        # for Gaussian data the empirical mean's error is distributed as
        # ||G|| / sqrt(N); the harness mean should come within a factor 4
        cfg = ExperimentConfig(distribution=_gauss(3), d=3, N=100, trials=400,
                               delta=0.05, norm=NormSpec("linf"),
                               estimators=("empirical",), bound_trials=4000)
        rep = run_experiment(cfg, threads=2)
        fs = dual_functionals(NormSpec("linf"), 3)
        e_g = gaussian_norm_expectation(CovarianceModel(np.eye(3)), fs, trials=4000, seed=9)
        predicted = e_g.value / math.sqrt(100)
        ratio = rep["estimators"]["empirical"]["mean_error"] / predicted
        assert 0.25 <= ratio <= 4.0
