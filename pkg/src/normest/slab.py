"""Slab-intersection mean estimator.

For each dual functional t the block means project to n points on the
line.  A point y is admissible for t when more than half of the blocks
satisfy |<t, Z_j> - <t, y>| <= eps, i.e. <t, y> lies in the majority
depth set of the projected block means.  The estimator returns a point
admissible for every functional simultaneously, found by greedy
most-violated projections, and a bisection over eps finds the smallest
radius at which such a point exists.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

import numpy as np

from normest.blocks import BlockSummary, as_sample, block_means, blocks_for_confidence, partition
from normest.norms import DEFAULT_BUDGET, FunctionalSet, NormSpec, dual_functionals, norm_eval


@dataclass(frozen=True, eq=False)
class DepthSet:
    """Union of closed intervals where >= threshold of n slabs overlap.

    Intervals are disjoint, sorted, and may be degenerate points;
    `depths` records the maximum overlap reached inside each interval.
    """

    intervals: np.ndarray
    depths: np.ndarray
    n: int
    threshold: int

    @property
    def is_empty(self) -> bool:
        return self.intervals.shape[0] == 0

    def contains(self, s: float) -> bool:
        return bool(
            np.any((self.intervals[:, 0] <= s) & (s <= self.intervals[:, 1]))
        )

    def distance(self, s: float) -> float:
        """Distance from s to the set; 0 inside, inf when the set is empty."""
        if self.is_empty:
            return float("inf")
        gaps = np.maximum(self.intervals[:, 0] - s, s - self.intervals[:, 1])
        return float(max(gaps.min(), 0.0))

    def project(self, s: float) -> float:
        """Nearest point of the set; ties go to higher depth, then leftmost."""
        if self.is_empty:
            raise ValueError("cannot project onto an empty depth set")
        lo, hi = self.intervals[:, 0], self.intervals[:, 1]
        gaps = np.maximum(np.maximum(lo - s, s - hi), 0.0)
        best = gaps.min()
        cand = np.nonzero(gaps == best)[0]
        if cand.size > 1:
            cand = cand[self.depths[cand] == self.depths[cand].max()]
        k = int(cand[0])
        return float(min(max(s, lo[k]), hi[k]))


def majority_depth_set(values: np.ndarray, epsilon: float) -> DepthSet:
    """Depth set of the closed intervals [v_j - eps, v_j + eps].

    Sweep over interval endpoints: at a point p the overlap counts
    starts <= p minus ends < p, and immediately to the right of p it is
    starts <= p minus ends <= p.  A maximal region where the count
    reaches floor(n/2) + 1 becomes one (possibly degenerate) interval.
    """
    v = np.asarray(values, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("depth set needs a nonempty 1-D array of block means")
    if not (np.all(np.isfinite(v)) and np.isfinite(epsilon)):
        raise ValueError("block means and epsilon must be finite")
    if epsilon < 0.0:
        raise ValueError(f"slab radius must be >= 0, got {epsilon}")
    n = v.size
    threshold = n // 2 + 1
    starts = np.sort(v - epsilon)
    ends = np.sort(v + epsilon)
    points = np.unique(np.concatenate([starts, ends]))
    depth_at = np.searchsorted(starts, points, side="right") - np.searchsorted(
        ends, points, side="left"
    )
    depth_after = np.searchsorted(starts, points, side="right") - np.searchsorted(
        ends, points, side="right"
    )
    intervals = []
    depths = []
    open_start = None
    peak = 0
    for p, at, after in zip(points, depth_at, depth_after):
        if open_start is None:
            if at >= threshold:
                open_start = p
                peak = int(at)
        else:
            peak = max(peak, int(at))
        if open_start is not None and after < threshold:
            intervals.append((open_start, p))
            depths.append(peak)
            open_start = None
    return DepthSet(
        intervals=np.array(intervals, dtype=np.float64).reshape(-1, 2),
        depths=np.array(depths, dtype=np.int64),
        n=n,
        threshold=threshold,
    )


@dataclass(frozen=True, eq=False)
class MembershipReport:
    """Where a candidate point stands against every functional's depth set."""

    member: bool
    worst_functional: int
    worst_violation: float
    per_functional_coverage: np.ndarray
    threshold: int


@dataclass(frozen=True, eq=False)
class EstimateResult:
    point: np.ndarray
    epsilon_used: float
    feasible: bool
    iterations: int
    certificate: MembershipReport


def _projected_means(blocks: BlockSummary, fs: FunctionalSet) -> np.ndarray:
    if blocks.means is None:
        raise ValueError("blocks carry no means; call block_means first")
    if blocks.means.shape[1] != fs.d:
        raise ValueError(
            f"block means in R^{blocks.means.shape[1]} do not match functionals in R^{fs.d}"
        )
    return blocks.means @ fs.vectors.T


def membership(
    y: np.ndarray, blocks: BlockSummary, fs: FunctionalSet, epsilon: float
) -> MembershipReport:
    """Check whether y lies in every functional's majority depth set."""
    y = np.asarray(y, dtype=np.float64)
    proj = _projected_means(blocks, fs)
    if y.shape != (fs.d,):
        raise ValueError(f"candidate point of shape {y.shape} does not match R^{fs.d}")
    y_proj = fs.vectors @ y
    coverage = (np.abs(proj - y_proj[None, :]) <= epsilon).sum(axis=0)
    worst_k = 0
    worst = -1.0
    for k in range(fs.size):
        viol = majority_depth_set(proj[:, k], epsilon).distance(float(y_proj[k]))
        if viol > worst:
            worst = viol
            worst_k = k
    return MembershipReport(
        member=(worst == 0.0),
        worst_functional=worst_k,
        worst_violation=float(worst),
        per_functional_coverage=coverage.astype(np.int64),
        threshold=blocks.n // 2 + 1,
    )


def solve_feasible(
    blocks: BlockSummary,
    fs: FunctionalSet,
    epsilon: float,
    init: np.ndarray | None = None,
    max_iter: int | None = None,
    tol: float = 1e-6,
) -> EstimateResult:
    """Find a point in the intersection of all majority depth sets.

    Greedy Kaczmarz-style scheme: repeatedly pick the functional whose
    depth set is farthest from the current iterate and project onto the
    nearest admissible hyperplane slice for it.  Convergence is declared
    when the worst violation drops to tol * epsilon; the returned
    certificate re-checks membership at radius epsilon * (1 + tol) so a
    feasible verdict never rests on the iterate alone.
    """
    if epsilon < 0.0 or not np.isfinite(epsilon):
        raise ValueError(f"slab radius must be finite and >= 0, got {epsilon}")
    if tol < 0.0:
        raise ValueError(f"tolerance must be >= 0, got {tol}")
    proj = _projected_means(blocks, fs)
    K = fs.size
    if max_iter is None:
        max_iter = 50 * K
    # absolute slack at machine precision: <t, y> and the depth sets come
    # from different BLAS paths, so radius 0 is unreachable by exact compare
    slack = 32.0 * np.finfo(np.float64).eps * max(1.0, float(np.abs(proj).max()))
    depth_sets = [majority_depth_set(proj[:, k], epsilon) for k in range(K)]
    y = (
        np.median(blocks.means, axis=0)
        if init is None
        else np.asarray(init, dtype=np.float64).copy()
    )
    if y.shape != (fs.d,):
        raise ValueError(f"init point of shape {y.shape} does not match R^{fs.d}")
    T = fs.vectors
    sq_norms = (T * T).sum(axis=1)
    iterations = 0
    solvable = all(not ds.is_empty for ds in depth_sets)
    done = False
    if solvable:
        # flatten the per-functional interval lists so each pass over the
        # K depth sets is a single reduceat instead of K python calls
        counts = np.array([ds.intervals.shape[0] for ds in depth_sets])
        seg = np.zeros(K, dtype=np.intp)
        np.cumsum(counts[:-1], out=seg[1:])
        lo_flat = np.concatenate([ds.intervals[:, 0] for ds in depth_sets])
        hi_flat = np.concatenate([ds.intervals[:, 1] for ds in depth_sets])
        owner = np.repeat(np.arange(K), counts)
    while solvable and not done:
        z = T @ y
        zi = z[owner]
        viols = np.minimum.reduceat(np.maximum(lo_flat - zi, zi - hi_flat), seg)
        np.maximum(viols, 0.0, out=viols)
        worst_k = int(np.argmax(viols))
        worst = float(viols[worst_k])
        if worst <= tol * epsilon + slack:
            done = True
            break
        if iterations >= max_iter:
            break
        target = depth_sets[worst_k].project(float(z[worst_k]))
        y = y + (target - z[worst_k]) * T[worst_k] / sq_norms[worst_k]
        iterations += 1
    certificate = membership(y, blocks, fs, epsilon * (1.0 + tol) + slack)
    return EstimateResult(
        point=y,
        epsilon_used=float(epsilon),
        feasible=bool(done and certificate.member),
        iterations=iterations,
        certificate=certificate,
    )


def estimate_mean(
    sample,
    spec: NormSpec,
    delta: float,
    epsilon: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    kappa: float = 1.0,
    shuffle_seed: int | None = None,
    functionals: FunctionalSet | None = None,
    max_iter: int | None = None,
    tol: float = 1e-6,
) -> EstimateResult:
    """Full pipeline at a fixed slab radius: blocks, duals, feasibility."""
    sample = as_sample(sample)
    n = blocks_for_confidence(delta, sample.N, kappa)
    blocks = block_means(sample, partition(sample.N, n, shuffle_seed))
    fs = functionals if functionals is not None else dual_functionals(spec, sample.d, budget, seed)
    return solve_feasible(blocks, fs, epsilon, max_iter=max_iter, tol=tol)


def adaptive_estimate(
    sample,
    spec: NormSpec,
    delta: float,
    budget: int = DEFAULT_BUDGET,
    seed: int = 0,
    eps_tol: float = 1e-3,
    kappa: float = 1.0,
    shuffle_seed: int | None = None,
    functionals: FunctionalSet | None = None,
    max_iter: int | None = None,
    tol: float = 1e-6,
) -> EstimateResult:
    """Bisect the slab radius down to the smallest feasible one.

    The upper bracket 2 * max_j norm_eval(Z_j - c), with c the
    coordinate-wise median of the block means, is always feasible: every
    projection of c is then within the bracket of every projected block
    mean.  Bisection stops once the bracket width drops below
    eps_tol * (current upper bracket); the result is the feasible point
    at the final upper bracket, with iterations totalled across solves.
    """
    if not (eps_tol > 0.0):
        raise ValueError(f"eps_tol must be > 0, got {eps_tol}")
    sample = as_sample(sample)
    n = blocks_for_confidence(delta, sample.N, kappa)
    blocks = block_means(sample, partition(sample.N, n, shuffle_seed))
    fs = functionals if functionals is not None else dual_functionals(spec, sample.d, budget, seed)
    center = np.median(blocks.means, axis=0)
    hi = 2.0 * max(norm_eval(z - center, fs) for z in blocks.means)
    total_iter = 0
    if hi == 0.0:
        result = solve_feasible(blocks, fs, 0.0, init=center, max_iter=max_iter, tol=tol)
        return result
    best = solve_feasible(blocks, fs, hi, init=center, max_iter=max_iter, tol=tol)
    total_iter += best.iterations
    lo = 0.0
    while hi - lo > eps_tol * hi:
        mid = 0.5 * (lo + hi)
        trial = solve_feasible(blocks, fs, mid, init=center, max_iter=max_iter, tol=tol)
        total_iter += trial.iterations
        if trial.feasible:
            hi = mid
            best = trial
        else:
            lo = mid
    return dataclasses.replace(best, iterations=total_iter)
