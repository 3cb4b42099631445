"""Command-line interface.

Subcommands: estimate (slab estimator on a CSV sample), bounds (oracle
radii for a known covariance), certify (uniform block-mean coverage
against a reference mean), bench (Monte Carlo benchmark from a JSON
config).  Exit codes: 0 success, 1 infeasible / certification failed,
2 usage or input errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from normest import __version__
from normest.blocks import block_means, blocks_for_confidence, partition
from normest.bounds import (
    BoundInputs,
    CovarianceModel,
    euclidean_bound,
    gaussian_norm_expectation,
    oracle_epsilon,
    weak_variance_R,
)
from normest.dataio import (
    CsvFormatError,
    load_matrix_csv,
    load_sample_csv,
    load_vector_csv,
    write_json,
    write_quantile_csv,
)
from normest.harness import ExperimentConfig, run_experiment
from normest.norms import DEFAULT_BUDGET, dual_functionals, parse_norm
from normest.slab import adaptive_estimate, solve_feasible
from normest.uniform_mom import certify_uniform


def _default_seed() -> int:
    env = os.environ.get("NORMEST_SEED")
    return int(env) if env else 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="RNG seed (default: $NORMEST_SEED or 0)")
    p.add_argument("--budget", type=int, default=DEFAULT_BUDGET, help="dual functional budget")
    p.add_argument("--out", default=None, help="write the JSON report here instead of stdout")
    p.add_argument("--threads", type=int, default=1, help="worker threads (0 = all cores)")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="normest", description=__doc__)
    parser.add_argument("--version", action="version", version=f"normest {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p_est = sub.add_parser("estimate", help="slab mean estimate from a CSV sample")
    p_est.add_argument("--input", required=True, help="sample CSV, one observation per row")
    p_est.add_argument("--norm", required=True, help="linf | l1 | l2 | lp:<p> | poly:<path>")
    p_est.add_argument("--delta", type=float, default=0.05, help="confidence level")
    p_est.add_argument("--kappa", type=float, default=1.0, help="block count multiplier")
    group = p_est.add_mutually_exclusive_group(required=True)
    group.add_argument("--epsilon", type=float, default=None, help="fixed slab radius")
    group.add_argument("--adaptive", action="store_true", help="bisect for the smallest feasible radius")
    p_est.add_argument("--eps-tol", type=float, default=1e-3, help="relative bisection tolerance")
    p_est.add_argument("--shuffle", action="store_true", help="shuffle rows before blocking (seeded)")
    _add_common(p_est)

    p_bnd = sub.add_parser("bounds", help="oracle slab radius for a known covariance")
    p_bnd.add_argument("--norm", required=True)
    p_bnd.add_argument("--cov", required=True, help="covariance CSV")
    p_bnd.add_argument("--n-samples", type=int, required=True, help="sample size N the bound is for")
    p_bnd.add_argument("--delta", type=float, default=0.05)
    p_bnd.add_argument("--trials", type=int, default=10000, help="Monte Carlo trials")
    p_bnd.add_argument("--c", type=float, default=1.0, help="leading constant")
    _add_common(p_bnd)

    p_cert = sub.add_parser("certify", help="uniform block-mean coverage around a reference mean")
    p_cert.add_argument("--input", required=True, help="sample CSV")
    p_cert.add_argument("--norm", required=True)
    p_cert.add_argument("--mu", required=True, help="reference mean CSV (single row or column)")
    p_cert.add_argument("--r", type=float, required=True, help="coverage radius")
    p_cert.add_argument("--blocks", type=int, required=True, help="number of blocks")
    _add_common(p_cert)

    p_bench = sub.add_parser("bench", help="Monte Carlo benchmark from a JSON config")
    p_bench.add_argument("--config", required=True, help="experiment config JSON")
    p_bench.add_argument("--csv", default=None, help="also write quantiles as CSV here")
    _add_common(p_bench)
    return parser


def _cmd_estimate(args) -> int:
    sample = load_sample_csv(args.input)
    spec = parse_norm(args.norm)
    seed = args.seed if args.seed is not None else _default_seed()
    shuffle_seed = seed if args.shuffle else None
    n = blocks_for_confidence(args.delta, sample.N, args.kappa)
    skeleton = partition(sample.N, n, shuffle_seed)
    fs = dual_functionals(spec, sample.d, args.budget, seed)
    if args.adaptive:
        result = adaptive_estimate(
            sample, spec, args.delta, eps_tol=args.eps_tol, kappa=args.kappa,
            shuffle_seed=shuffle_seed, functionals=fs,
        )
    else:
        blocks = block_means(sample, skeleton)
        result = solve_feasible(blocks, fs, args.epsilon)
    report = {
        "version": __version__,
        "config": {
            "input": args.input,
            "norm": args.norm,
            "delta": args.delta,
            "kappa": args.kappa,
            "epsilon": args.epsilon,
            "adaptive": bool(args.adaptive),
            "eps_tol": args.eps_tol,
            "budget": args.budget,
            "seed": seed,
            "shuffle": bool(args.shuffle),
        },
        "point": result.point,
        "epsilon_used": result.epsilon_used,
        "feasible": result.feasible,
        "iterations": result.iterations,
        "n": skeleton.n,
        "m": skeleton.m,
        "dropped": skeleton.dropped,
        "functional_count": fs.size,
        "exact": fs.exact,
        "worst_violation": result.certificate.worst_violation,
    }
    write_json(args.out, report)
    return 0 if result.feasible else 1


def _cmd_bounds(args) -> int:
    spec = parse_norm(args.norm)
    cov = CovarianceModel(load_matrix_csv(args.cov))
    seed = args.seed if args.seed is not None else _default_seed()
    fs = dual_functionals(spec, cov.d, args.budget, seed)
    e_g = gaussian_norm_expectation(cov, fs, trials=args.trials, seed=seed)
    r = weak_variance_R(cov, fs)
    # without sample access the symmetrized-process term falls back to its
    # Gaussian limit, so the max in the bound is driven by the tail term
    eps = oracle_epsilon(
        BoundInputs(e_yn=e_g.value, e_g=e_g.value, r_weak=r, N=args.n_samples,
                    delta=args.delta, c=args.c)
    )
    report = {
        "version": __version__,
        "config": {
            "norm": args.norm,
            "cov": args.cov,
            "n_samples": args.n_samples,
            "delta": args.delta,
            "trials": args.trials,
            "c": args.c,
            "budget": args.budget,
            "seed": seed,
        },
        "e_g": e_g.value,
        "e_g_stderr": e_g.stderr,
        "r_weak": r,
        "epsilon": eps,
        "euclidean_epsilon": euclidean_bound(cov, args.n_samples, args.delta, args.c)
        if spec.kind == "l2"
        else None,
        "functional_count": fs.size,
        "exact": fs.exact,
    }
    write_json(args.out, report)
    return 0


def _cmd_certify(args) -> int:
    sample = load_sample_csv(args.input)
    spec = parse_norm(args.norm)
    mu = load_vector_csv(args.mu)
    seed = args.seed if args.seed is not None else _default_seed()
    fs = dual_functionals(spec, sample.d, args.budget, seed)
    report = certify_uniform(sample, fs, mu, args.r, args.blocks)
    payload = {
        "version": __version__,
        "config": {
            "input": args.input,
            "norm": args.norm,
            "mu": args.mu,
            "r": args.r,
            "blocks": args.blocks,
            "budget": args.budget,
            "seed": seed,
        },
        "r": report.r,
        "n": report.n,
        "required": report.required,
        "min_coverage": report.min_coverage,
        "per_functional_coverage": report.per_functional_coverage,
        "passed": report.passed,
    }
    write_json(args.out, payload)
    return 0 if report.passed else 1


def _cmd_bench(args) -> int:
    with open(args.config) as fh:
        cfg = json.load(fh)
    if args.seed is not None:
        cfg["master_seed"] = args.seed
    elif cfg.get("master_seed") is None:
        cfg["master_seed"] = _default_seed()
    config = ExperimentConfig.from_dict(cfg)
    threads = args.threads if args.threads > 0 else (os.cpu_count() or 1)
    report = run_experiment(config, threads=threads)
    write_json(args.out, report)
    if args.csv is not None:
        write_quantile_csv(args.csv, report)
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        if args.command == "estimate":
            return _cmd_estimate(args)
        if args.command == "bounds":
            return _cmd_bounds(args)
        if args.command == "certify":
            return _cmd_certify(args)
        return _cmd_bench(args)
    except (CsvFormatError, FileNotFoundError) as exc:
        print(f"normest: {exc}", file=sys.stderr)
        return 2
    except (ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"normest: invalid input: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
