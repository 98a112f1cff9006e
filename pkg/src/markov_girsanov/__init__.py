"""Girsanov change of measure for finite-state Markov chains and Markov jump processes."""

from .core import (
    DiscretePath,
    Distribution,
    GeneratorMatrix,
    JumpTrajectory,
    StateSpace,
    StochasticMatrix,
    apply_generator,
    transition_matrix,
    validate_generator,
    validate_stochastic,
)
from .likelihood import (
    LikelihoodProcess,
    compensated_log_integral,
    direct_estimate,
    importance_estimate,
    likelihood_ctmc,
    likelihood_discrete,
)
from .oracle import (
    WeightedPathSet,
    ctmc_marginal_oracle,
    enumerate_paths,
    exact_expectation,
    pathwise_likelihood_oracle,
)
from .quadratic import QuadraticCoefficients, build_quadratic, feasibility_margin
from .representation import (
    HadamardCorrection,
    RepresentationCoefficients,
    delta_basis_decompose,
    extract_jump_coefficients,
    hadamard_decompose,
    recover_transition,
)
from .simulate import (
    ConstantCoefficients,
    ConstantControl,
    JumpHistory,
    JumpStateTable,
    SeededSampler,
    StepStateTable,
    count_jumps,
    simulate_ctmc,
    simulate_discrete,
)
from .verify import (
    CheckReport,
    check_discrete_martingale,
    check_dynkin_mc,
    check_generator_limit,
    check_Z_martingale_discrete,
    check_Z_mean_one_mc,
)

__version__ = "0.1.0"
