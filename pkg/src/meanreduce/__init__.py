"""meanreduce: deviation means, reductions of means as fixed points, and
randomized verification of mean inequalities."""

from .core import (
    Barycentric,
    DEFAULT_CONFIG,
    Injection,
    Interval,
    POSITIVE_REALS,
    REALS,
    SolverConfig,
    SolverReport,
    as_point,
    hull_combination,
    in_hull_1d,
    select,
    splice,
)
from .errors import (
    DomainError,
    ExpressionError,
    HullViolationError,
    InvalidArgumentError,
    InvalidDeviationError,
    InvalidPotentialError,
    InvalidSamplerError,
    MeansError,
    NoConvergenceError,
    NotAMeanError,
)
from .scalar import (
    DeviationTuple,
    GeneratorFn,
    ScalarDeviation,
    WeightFn,
    bajraktarevic_mean,
    constant_weight,
    deviation_mean,
    deviation_sign,
    e_sum,
    gini_mean,
    holder_mean,
    make_bajraktarevic_deviation,
    matkowski_mean,
    quasi_arithmetic_mean,
    weighted_arith_mean,
)
from .vector import (
    Covector,
    GenDeviation,
    PotentialFn,
    gen_deviation_mean,
    gen_e_sum,
    grid_oracle_mean,
    inner_product_deviation,
    lift_scalar_deviation,
    make_norm_sq_potential,
    make_potential_deviation,
    potential_mean,
    verify_vi,
)
from .reduction import (
    MeanFn,
    ReductionResult,
    check_deviation_reduction,
    check_weighted_arith_reduction,
    reduce_mean,
    reduce_scalar,
    reduce_vector,
    reduced_mean_fn,
    spliced_eval,
)
from .descriptors import MeanDescriptor, build_mean, evaluate_with_report
from .lab import (
    BoxSampler,
    ConvexityCase,
    CounterexampleReport,
    FuzzCase,
    HolderMinkowskiCase,
    ReportPair,
    check_convexity,
    check_holder_minkowski,
    check_reduced_convexity,
    compare_means,
    fuzz_suite,
)

__version__ = "0.1.0"
