"""Norms represented by finite families of dual functionals.

A norm is evaluated as the largest |<t, v>| over a family of dual
vectors t.  For polytope norms (sup norm, sum norm, small custom
families) the family is exactly the set of extreme points of the dual
unit ball, so evaluation is exact.  For smooth balls (l2, lp) a seeded
random net of the dual sphere stands in for the extreme points and the
evaluation is a deterministic lower bound on the true norm.

Families are stored as one representative per {t, -t} pair; every
evaluation takes absolute values, so both signs are always accounted
for.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from normest.dataio import load_matrix_csv

DEFAULT_BUDGET = 4096

_KINDS = ("linf", "l1", "l2", "lp", "poly")


@dataclass(frozen=True, eq=False)
class NormSpec:
    """Which norm to use; `p` only for kind "lp", functionals only for "poly"."""

    kind: str
    p: float | None = None
    custom_functionals: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise ValueError(f"unknown norm kind {self.kind!r}, expected one of {_KINDS}")
        if self.kind == "lp":
            if self.p is None or not np.isfinite(self.p) or self.p <= 1.0:
                raise ValueError("lp norm needs a finite exponent p > 1")
        elif self.p is not None:
            raise ValueError(f"exponent p is only meaningful for kind 'lp', not {self.kind!r}")
        if self.kind == "poly":
            m = np.asarray(self.custom_functionals, dtype=np.float64)
            if m.ndim != 2 or m.shape[0] == 0:
                raise ValueError("poly norm needs a nonempty 2-D array of functionals")
            if not np.all(np.isfinite(m)):
                raise ValueError("poly functionals must be finite")
            if np.any(np.all(m == 0.0, axis=1)):
                raise ValueError("poly functionals must not contain zero rows")
            object.__setattr__(self, "custom_functionals", m)
        elif self.custom_functionals is not None:
            raise ValueError("custom functionals are only meaningful for kind 'poly'")


def parse_norm(text: str) -> NormSpec:
    """Parse a command-line norm argument.

    Accepted forms: "linf", "l1", "l2", "lp:<p>", "poly:<path.csv>" where
    the CSV holds one functional per row.
    """
    t = text.strip()
    if t in ("linf", "l1", "l2"):
        return NormSpec(t)
    if t.startswith("lp:"):
        try:
            p = float(t[3:])
        except ValueError:
            raise ValueError(f"bad lp exponent in norm spec {text!r}") from None
        return NormSpec("lp", p=p)
    if t.startswith("poly:"):
        return NormSpec("poly", custom_functionals=load_matrix_csv(t[5:]))
    raise ValueError(
        f"unrecognized norm spec {text!r}; expected linf, l1, l2, lp:<p> or poly:<path>"
    )


@dataclass(frozen=True, eq=False)
class FunctionalSet:
    """Dual functionals for one norm: one representative per +/- pair.

    `exact` records whether the rows enumerate every extreme point of the
    dual ball (polytope norms within budget) or only a sampled net.
    """

    vectors: np.ndarray
    exact: bool
    kind: str
    seed: int | None = None

    def __post_init__(self):
        v = np.ascontiguousarray(self.vectors, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] == 0 or v.shape[1] == 0:
            raise ValueError("functional set must be a nonempty 2-D array")
        if not np.all(np.isfinite(v)):
            raise ValueError("functionals must be finite")
        v.setflags(write=False)
        object.__setattr__(self, "vectors", v)

    @property
    def d(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def signed_vectors(self) -> np.ndarray:
        """Both signs of every representative, stacked."""
        return np.vstack([self.vectors, -self.vectors])


def _canonical_sign(rows: np.ndarray) -> np.ndarray:
    # flip each row so its first nonzero entry is positive
    out = rows.copy()
    for i in range(out.shape[0]):
        nz = np.nonzero(out[i])[0]
        if nz.size and out[i, nz[0]] < 0:
            out[i] = -out[i]
    return out


def _l1_functionals(d: int, budget: int, rng: np.random.Generator):
    # dual ball of the sum norm is the sup-norm cube; extreme points are
    # sign vectors, 2^(d-1) representatives after identifying t with -t
    if 2**d <= budget:
        rows = [(1.0,) + tail for tail in itertools.product((1.0, -1.0), repeat=d - 1)]
        return np.array(rows, dtype=np.float64), True
    target = budget if d > 60 else min(budget, 2 ** (d - 1))
    seen = set()
    rows = []
    while len(rows) < target:
        batch = rng.integers(0, 2, size=(2 * (target - len(rows)), d)).astype(np.float64)
        batch = 2.0 * batch - 1.0
        batch[:, 0] = 1.0
        for row in batch:
            key = row.tobytes()
            if key not in seen:
                seen.add(key)
                rows.append(row)
                if len(rows) == target:
                    break
    return np.array(rows), False


def dual_functionals(
    spec: NormSpec, d: int, budget: int = DEFAULT_BUDGET, seed: int = 0
) -> FunctionalSet:
    """Build the dual family for `spec` in dimension d.

    `budget` caps the family size for sampled or enumerated duals;
    `seed` fixes the net for non-polytope norms so repeated calls are
    bitwise identical.
    """
    if d < 1:
        raise ValueError(f"dimension must be >= 1, got {d}")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if spec.kind == "linf":
        return FunctionalSet(np.eye(d), exact=True, kind="linf")
    if spec.kind == "l1":
        rng = np.random.default_rng(seed)
        vecs, exact = _l1_functionals(d, budget, rng)
        return FunctionalSet(vecs, exact=exact, kind="l1", seed=None if exact else seed)
    if spec.kind == "l2":
        rng = np.random.default_rng(seed)
        g = rng.standard_normal((budget, d))
        norms = np.linalg.norm(g, axis=1)
        while np.any(norms == 0.0):
            bad = norms == 0.0
            g[bad] = rng.standard_normal((int(bad.sum()), d))
            norms = np.linalg.norm(g, axis=1)
        return FunctionalSet(g / norms[:, None], exact=False, kind="l2", seed=seed)
    if spec.kind == "lp":
        # dual exponent q; uniform points on the q-sphere come from the
        # generalized Gaussian density exp(-|x|^q), normalized
        q = spec.p / (spec.p - 1.0)
        rng = np.random.default_rng(seed)
        mag = rng.gamma(1.0 / q, 1.0, size=(budget, d)) ** (1.0 / q)
        signs = 2.0 * rng.integers(0, 2, size=(budget, d)).astype(np.float64) - 1.0
        t = signs * mag
        qnorm = (np.abs(t) ** q).sum(axis=1) ** (1.0 / q)
        while np.any(qnorm == 0.0):
            bad = qnorm == 0.0
            k = int(bad.sum())
            t[bad] = (2.0 * rng.integers(0, 2, (k, d)) - 1.0) * rng.gamma(
                1.0 / q, 1.0, (k, d)
            ) ** (1.0 / q)
            qnorm = (np.abs(t) ** q).sum(axis=1) ** (1.0 / q)
        return FunctionalSet(t / qnorm[:, None], exact=False, kind="lp", seed=seed)
    # poly: caller-supplied generators, closed under sign by canonicalizing
    m = spec.custom_functionals
    if m.shape[1] != d:
        raise ValueError(f"poly functionals have dimension {m.shape[1]}, expected {d}")
    vecs = np.unique(_canonical_sign(m), axis=0)
    return FunctionalSet(vecs, exact=True, kind="poly")


def norm_eval(v: np.ndarray, fs: FunctionalSet) -> float:
    """Norm of v as seen through the functional family: max |<t, v>|."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1 or v.shape[0] != fs.d:
        raise ValueError(f"vector of shape {v.shape} does not match functionals in R^{fs.d}")
    return float(np.abs(fs.vectors @ v).max())


def norm_eval_many(vs: np.ndarray, fs: FunctionalSet) -> np.ndarray:
    """Row-wise norm_eval for a stack of vectors."""
    vs = np.asarray(vs, dtype=np.float64)
    if vs.ndim != 2 or vs.shape[1] != fs.d:
        raise ValueError(f"array of shape {vs.shape} does not match functionals in R^{fs.d}")
    return np.abs(vs @ fs.vectors.T).max(axis=1)


def direct_norm(v: np.ndarray, spec: NormSpec) -> float:
    """Closed-form norm for the analytic kinds; poly has no closed form."""
    v = np.asarray(v, dtype=np.float64)
    if v.ndim != 1:
        raise ValueError("direct_norm expects a 1-D vector")
    if spec.kind == "linf":
        return float(np.abs(v).max())
    if spec.kind == "l1":
        return float(np.abs(v).sum())
    if spec.kind == "l2":
        return float(np.linalg.norm(v))
    if spec.kind == "lp":
        return float((np.abs(v) ** spec.p).sum() ** (1.0 / spec.p))
    raise ValueError("poly norms have no closed form; use norm_eval")
