import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from normest.blocks import SampleMatrix, block_means, partition
from normest.norms import NormSpec, dual_functionals
from normest.slab import (
    adaptive_estimate,
    estimate_mean,
    majority_depth_set,
    membership,
    solve_feasible,
)


def brute_force_depth(values, epsilon, grid):
    """Independent oracle: count covering slabs pointwise on a dense grid."""
    counts = (np.abs(grid[:, None] - values[None, :]) <= epsilon).sum(axis=1)
    return counts >= (values.size // 2 + 1)


def _blocks_from_means(z):
    z = np.asarray(z, dtype=np.float64)
    if z.ndim == 1:
        z = z[:, None]
    return block_means(SampleMatrix(z), partition(z.shape[0], z.shape[0]))


class TestMajorityDepthSet:
    def test_cluster_with_outliers(self):
        ds = majority_depth_set(np.array([0.0, 1.0, 2.0, 10.0, 11.0]), 1.5)
        assert ds.threshold == 3
        assert np.array_equal(ds.intervals, [[0.5, 1.5]])
        assert np.array_equal(ds.depths, [3])

    def test_identical_values(self):
        ds = majority_depth_set(np.array([5.0, 5.0, 5.0, 5.0]), 0.1)
        assert np.allclose(ds.intervals, [[4.9, 5.1]])
        assert np.array_equal(ds.depths, [4])

    def test_spread_out_is_empty(self):
        ds = majority_depth_set(np.array([0.0, 10.0, 20.0]), 1.0)
        assert ds.is_empty
        assert ds.distance(5.0) == np.inf

    def test_degenerate_point_components(self):
        ds = majority_depth_set(np.array([0.0, 1.0, 2.0]), 0.5)
        assert np.array_equal(ds.intervals, [[0.5, 0.5], [1.5, 1.5]])
        assert np.array_equal(ds.depths, [2, 2])
        assert ds.contains(0.5) and ds.contains(1.5)
        assert not ds.contains(1.0)

    def test_zero_radius(self):
        ds = majority_depth_set(np.array([3.0, 3.0, 8.0]), 0.0)
        assert np.array_equal(ds.intervals, [[3.0, 3.0]])

    def test_intervals_disjoint_and_sorted(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            n = rng.integers(1, 12)
            v = np.round(rng.normal(0, 2, n), 2)
            eps = round(float(rng.uniform(0, 2)), 2)
            ds = majority_depth_set(v, eps)
            iv = ds.intervals
            assert np.all(iv[:, 0] <= iv[:, 1])
            if iv.shape[0] > 1:
                assert np.all(iv[1:, 0] > iv[:-1, 1])
            assert np.all(ds.depths >= ds.threshold)

    def test_matches_brute_force_oracle(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            n = int(rng.integers(1, 10))
            v = rng.integers(-8, 8, n).astype(float) / 2.0
            eps = float(rng.integers(0, 6)) / 4.0
            ds = majority_depth_set(v, eps)
            # half-integer data keeps all interval endpoints on the grid
            grid = np.arange(-10, 10.25, 0.25)
            inside = brute_force_depth(v, eps, grid)
            claimed = np.zeros_like(inside)
            for lo, hi in ds.intervals:
                claimed |= (grid >= lo) & (grid <= hi)
            assert np.array_equal(inside, claimed)

    def test_invalid_inputs(self):
        with pytest.raises(ValueError):
            majority_depth_set(np.array([]), 1.0)
        with pytest.raises(ValueError):
            majority_depth_set(np.array([1.0]), -0.5)
        with pytest.raises(ValueError):
            majority_depth_set(np.array([np.nan]), 0.5)

    def test_projection_tie_prefers_higher_depth(self):
        # components {0.5} (depth 2) and {1.5} (depth 2) around s = 1.0: tie
        # on distance and depth resolves to the leftmost
        ds = majority_depth_set(np.array([0.0, 1.0, 2.0]), 0.5)
        assert ds.project(1.0) == 0.5
        # asymmetric depths: [0,0,2] at eps .5 -> [-0.5,.5] depth 2, {1.5}...
        ds2 = majority_depth_set(np.array([0.0, 0.0, 2.0]), 0.5)
        assert np.array_equal(ds2.intervals, [[-0.5, 0.5]])

    def test_distance_and_project_agree(self):
        rng = np.random.default_rng(21)
        for _ in range(100):
            v = rng.normal(0, 3, int(rng.integers(1, 9)))
            ds = majority_depth_set(v, float(rng.uniform(0.1, 3)))
            if ds.is_empty:
                continue
            s = float(rng.normal(0, 5))
            p = ds.project(s)
            assert ds.contains(p)
            assert abs(p - s) == pytest.approx(ds.distance(s), abs=1e-12)


class TestMembership:
    def setup_method(self):
        self.blocks = _blocks_from_means(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
        self.fs = dual_functionals(NormSpec("linf"), 2)

    def test_center_is_member(self):
        rep = membership(np.array([1.0, 1.0]), self.blocks, self.fs, 1.5)
        assert rep.member
        assert rep.worst_violation == 0.0
        assert np.all(rep.per_functional_coverage >= rep.threshold)

    def test_far_point_is_not(self):
        rep = membership(np.array([5.0, 5.0]), self.blocks, self.fs, 1.5)
        assert not rep.member
        assert rep.worst_violation == pytest.approx(2.5)
        assert rep.per_functional_coverage.max() < rep.threshold

    def test_huge_radius_admits_anything(self):
        rep = membership(np.array([5.0, 5.0]), self.blocks, self.fs, 100.0)
        assert rep.member
        assert np.all(rep.per_functional_coverage == 3)

    def test_member_iff_all_coverages_reach_threshold(self):
        rng = np.random.default_rng(31)
        fs = dual_functionals(NormSpec("l1"), 2, budget=16)
        for _ in range(100):
            blocks = _blocks_from_means(rng.normal(0, 1, (5, 2)))
            y = rng.normal(0, 1, 2)
            rep = membership(y, blocks, fs, float(rng.uniform(0.2, 2.0)))
            assert rep.member == bool(np.all(rep.per_functional_coverage >= rep.threshold))
            assert rep.member == (rep.worst_violation == 0.0)


@given(st.data())
@settings(max_examples=60, deadline=None)
def test_membership_nested_in_radius(data):
    rng = np.random.default_rng(data.draw(st.integers(0, 2**32 - 1)))
    blocks = _blocks_from_means(rng.normal(0, 1, (int(rng.integers(1, 7)), 2)))
    fs = dual_functionals(NormSpec("linf"), 2)
    y = rng.normal(0, 1, 2)
    eps = float(rng.uniform(0.05, 1.5))
    bigger = eps * float(rng.uniform(1.0, 3.0))
    if membership(y, blocks, fs, eps).member:
        assert membership(y, blocks, fs, bigger).member


class TestSolveFeasible:
    def test_feasible_init_takes_zero_iterations(self):
        blocks = _blocks_from_means(np.full((4, 3), 2.0))
        fs = dual_functionals(NormSpec("linf"), 3)
        res = solve_feasible(blocks, fs, 0.5)
        assert res.feasible
        assert res.iterations == 0
        assert np.allclose(res.point, 2.0)

    def test_walks_into_the_set(self):
        blocks = _blocks_from_means(np.array([[0.0, 0.0], [1.0, 1.0], [2.0, 2.0]]))
        fs = dual_functionals(NormSpec("linf"), 2)
        res = solve_feasible(blocks, fs, 1.5, init=np.array([5.0, 5.0]))
        assert res.feasible
        assert res.iterations >= 1
        assert membership(res.point, blocks, fs, 1.5 * (1 + 1e-6) + 1e-12).member

    def test_empty_depth_set_reports_infeasible(self):
        blocks = _blocks_from_means(np.array([0.0, 10.0, 20.0]))
        fs = dual_functionals(NormSpec("linf"), 1)
        res = solve_feasible(blocks, fs, 1.0)
        assert not res.feasible
        assert res.iterations == 0
        assert res.certificate.worst_violation == np.inf

    def test_feasible_verdict_implies_certificate(self):
        rng = np.random.default_rng(41)
        fs = dual_functionals(NormSpec("l1"), 3, budget=16)
        for _ in range(150):
            blocks = _blocks_from_means(rng.normal(0, 1, (int(rng.integers(1, 8)), 3)))
            eps = float(rng.uniform(0.05, 2.0))
            init = rng.normal(0, 2, 3)
            res = solve_feasible(blocks, fs, eps, init=init)
            if res.feasible:
                assert res.certificate.member
                assert res.certificate.worst_violation == 0.0

    def test_epsilon_zero_constant_data(self):
        blocks = _blocks_from_means(np.full((5, 2), -3.0))
        fs = dual_functionals(NormSpec("l2"), 2, budget=32)
        res = solve_feasible(blocks, fs, 0.0)
        assert res.feasible
        assert np.allclose(res.point, -3.0)

    def test_negative_epsilon_rejected(self):
        blocks = _blocks_from_means(np.zeros((2, 1)))
        fs = dual_functionals(NormSpec("linf"), 1)
        with pytest.raises(ValueError):
            solve_feasible(blocks, fs, -1.0)


class TestEstimateMean:
    def test_constant_sample_recovers_the_point(self):
        x0 = np.array([2.0, -1.0, 0.5])
        sample = SampleMatrix(np.tile(x0, (20, 1)))
        res = estimate_mean(sample, NormSpec("linf"), 0.05, epsilon=0.01)
        assert res.feasible
        assert np.allclose(res.point, x0, atol=1e-12)

    def test_one_dimension_matches_depth_set(self):
        rng = np.random.default_rng(51)
        x = rng.normal(3.0, 1.0, 40)
        sample = SampleMatrix(x)
        res = estimate_mean(sample, NormSpec("linf"), 0.1, epsilon=1.0)
        n = res.certificate.per_functional_coverage.size  # one functional
        assert n == 1
        bm = block_means(sample, partition(40, 3)).means[:, 0]
        ds = majority_depth_set(bm, 1.0)
        assert res.feasible
        assert ds.contains(float(res.point[0]))

    def test_translation_equivariance(self):
        rng = np.random.default_rng(61)
        x = rng.standard_t(3, (60, 2))
        shift = np.array([10.0, -5.0])
        r1 = estimate_mean(SampleMatrix(x), NormSpec("l1"), 0.05, epsilon=1.0)
        r2 = estimate_mean(SampleMatrix(x + shift), NormSpec("l1"), 0.05, epsilon=1.0)
        assert r1.feasible and r2.feasible
        assert np.allclose(r2.point - r1.point, shift, atol=1e-9)


class TestAdaptiveEstimate:
    def test_constant_sample_gives_zero_radius(self):
        x0 = np.array([1.0, 2.0])
        res = adaptive_estimate(SampleMatrix(np.tile(x0, (12, 1))), NormSpec("linf"), 0.1)
        assert res.feasible
        assert res.epsilon_used == 0.0
        assert np.allclose(res.point, x0)

    def test_one_dimensional_three_blocks(self):
        # block means 0, 1, 2: majority needs 2 slabs to meet, first at 0.5
        sample = SampleMatrix(np.array([0.0, 1.0, 2.0]))
        res = adaptive_estimate(sample, NormSpec("linf"), 0.26, eps_tol=1e-4)
        assert res.feasible
        assert res.epsilon_used == pytest.approx(0.5, rel=1e-3)
        ds = majority_depth_set(np.array([0.0, 1.0, 2.0]), res.epsilon_used)
        assert ds.contains(float(res.point[0]))

    def test_found_radius_is_minimal_up_to_tolerance(self):
        rng = np.random.default_rng(71)
        sample = SampleMatrix(rng.normal(0, 1, (50, 2)))
        spec = NormSpec("linf")
        res = adaptive_estimate(sample, spec, 0.1, eps_tol=1e-3)
        assert res.feasible
        # just below the bracket gap the problem must be infeasible
        probe = res.epsilon_used * (1 - 3e-3)
        res_lo = estimate_mean(sample, spec, 0.1, epsilon=probe)
        assert not res_lo.feasible

    def test_iterations_accumulate_across_bisection(self):
        rng = np.random.default_rng(81)
        sample = SampleMatrix(rng.normal(0, 1, (60, 3)))
        res = adaptive_estimate(sample, NormSpec("l1"), 0.05, budget=32)
        assert res.feasible
        assert res.iterations >= 0

    def test_bad_eps_tol(self):
        with pytest.raises(ValueError):
            adaptive_estimate(SampleMatrix(np.ones((4, 1))), NormSpec("linf"), 0.1, eps_tol=0.0)


class TestTwoPointDiameter:
    def test_any_two_members_are_within_two_epsilon(self):
        # members found from far-apart inits; the norm gap between any two
        # is at most 2 eps because majorities pairwise intersect
        rng = np.random.default_rng(91)
        spec = NormSpec("linf")
        checked = 0
        for _ in range(200):
            d = int(rng.integers(1, 6))
            nb = int(rng.integers(3, 9))
            z = rng.normal(0, 1, (nb, d))
            blocks = _blocks_from_means(z)
            fs = dual_functionals(spec, d)
            center = np.median(z, axis=0)
            eps_feas = float(np.abs(z - center).max())
            eps = eps_feas * float(rng.uniform(0.6, 1.3))
            r1 = solve_feasible(blocks, fs, eps, init=center + rng.normal(0, 3, d))
            r2 = solve_feasible(blocks, fs, eps, init=center - rng.normal(0, 3, d))
            if not (r1.feasible and r2.feasible):
                continue
            checked += 1
            gap = float(np.abs(r1.point - r2.point).max())
            assert gap <= 2 * eps + 1e-9
        assert checked >= 60
