"""Mean estimation under general norms, with heavy-tailed guarantees.

The centerpiece is a block-median construction: dual functionals of the
chosen norm turn block means into one-dimensional majority depth sets,
and the estimator is any point lying in all of them at the smallest
feasible slab radius.  Companion modules compute the radius the theory
guarantees, certify the uniform block-mean event it relies on, and
benchmark against classical estimators on synthetic heavy-tailed data.
"""

__version__ = "0.1.0"

from normest.baselines import coordinatewise_mom, empirical_mean, geometric_mom
from normest.blocks import (
    BlockSummary,
    SampleMatrix,
    block_means,
    blocks_for_confidence,
    partition,
    scalar_mom,
)
from normest.bounds import (
    BoundInputs,
    CovarianceModel,
    EtaScales,
    MonteCarloEstimate,
    euclidean_bound,
    gaussian_norm_expectation,
    oracle_epsilon,
    rademacher_norm_expectation,
    uniform_eta_recipe,
    weak_variance_R,
)
from normest.harness import (
    DistributionSpec,
    ExperimentConfig,
    run_experiment,
    sample_distribution,
)
from normest.norms import (
    DEFAULT_BUDGET,
    FunctionalSet,
    NormSpec,
    direct_norm,
    dual_functionals,
    norm_eval,
    norm_eval_many,
    parse_norm,
)
from normest.slab import (
    DepthSet,
    EstimateResult,
    MembershipReport,
    adaptive_estimate,
    estimate_mean,
    majority_depth_set,
    membership,
    solve_feasible,
)
from normest.uniform_mom import (
    CertificationReport,
    FiniteClassBound,
    certify_uniform,
    finite_class_accuracy,
)
