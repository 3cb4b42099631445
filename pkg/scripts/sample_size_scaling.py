"""Trace estimator error against sample size on a fixed heavy-tailed setup.

Sweeps N over a doubling grid, runs the full estimator suite at each
size, and prints the 0.9-quantile error next to the computed oracle
radius. On a log-log plot the slab column should run parallel to the
radius column with slope -1/2; the empirical mean flattens out once
the tails start to dominate.

The default settings take roughly ten minutes; pass --trials 25 for a
quick look.

Usage:
    python3 scripts/sample_size_scaling.py --outdir results/scaling
"""

import argparse
import os
from dataclasses import dataclass

import numpy as np

from normest.dataio import write_json
from normest.harness import DistributionSpec, ExperimentConfig, run_experiment
from normest.norms import NormSpec


@dataclass(frozen=True)
class ScalingSettings:
    d: int = 8
    dof: float = 2.5
    grid: tuple = (500, 1000, 2000, 4000, 8000)
    trials: int = 100
    delta: float = 0.05
    norm: str = "l2"
    budget: int = 256  # net size; the adaptive search cost scales with it
    eps_tol: float = 1e-2
    master_seed: int = 77
    threads: int = 4


def run(settings: ScalingSettings, outdir: str) -> None:
    os.makedirs(outdir, exist_ok=True)
    dist = DistributionSpec(
        "student_t", mu=np.zeros(settings.d), dof=settings.dof, scale=1.0
    )
    table = []
    for N in settings.grid:
        config = ExperimentConfig(
            distribution=dist,
            d=settings.d,
            N=N,
            trials=settings.trials,
            delta=settings.delta,
            norm=NormSpec(settings.norm),
            budget=settings.budget,
            eps_tol=settings.eps_tol,
            master_seed=settings.master_seed,
        )
        report = run_experiment(config, threads=settings.threads)
        write_json(os.path.join(outdir, f"N{N}.json"), report)
        levels = report["quantile_levels"]
        k90 = levels.index(0.9)
        row = {name: res["quantiles"][k90] for name, res in report["estimators"].items()}
        row["N"] = N
        row["radius"] = report["bounds"]["epsilon_oracle"]
        table.append(row)
        print(f"done: N={N}")

    names = sorted(n for n in table[0] if n not in ("N", "radius"))
    header = f"{'N':>6}" + "".join(f"{n:>12}" for n in names) + f"{'radius':>12}"
    print()
    print("0.9-quantile error by sample size")
    print(header)
    print("-" * len(header))
    for row in table:
        cells = "".join(f"{row[n]:>12.4f}" for n in names)
        print(f"{row['N']:>6}{cells}{row['radius']:>12.4f}")
    base = table[0]
    last = table[-1]
    shrink = (settings.grid[-1] / settings.grid[0]) ** 0.5
    print()
    print(f"slab error shrank {base['slab'] / last['slab']:.2f}x over the grid "
          f"(sqrt(N) ratio is {shrink:.2f}x)")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--outdir", default="results/scaling")
    parser.add_argument("--trials", type=int, default=None, help="override trial count")
    parser.add_argument("--threads", type=int, default=None)
    args = parser.parse_args()
    settings = ScalingSettings()
    if args.trials is not None or args.threads is not None:
        settings = ScalingSettings(
            trials=args.trials if args.trials is not None else settings.trials,
            threads=args.threads if args.threads is not None else settings.threads,
        )
    run(settings, args.outdir)


if __name__ == "__main__":
    main()
