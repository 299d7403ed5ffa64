"""Nearest reversible sparse Markov chains.

Given a sparse row-stochastic matrix, find the closest (Frobenius norm)
transition matrix that is reversible with respect to the chain's stationary
distribution and confined to the symmetrized sparsity pattern.  The package
also carries the closed-form Metropolis-Hastings/Barker reversibilization
baselines, ergodic decomposition utilities, an in-repo QP solver, and the
experiment drivers (random sparse ensembles, Langevin count matrices).
"""

from .chain_analysis import (
    CycleCheckResult,
    ErgodicDecomposition,
    StationarySolveOptions,
    ergodic_decomposition,
    irreducible_stationary,
    is_irreducible,
    kolmogorov_cycle_check,
    stationary_distribution,
    stationary_mixture,
    strongly_connected_components,
)
from .exceptions import (
    ClassSolveFailed,
    DegenerateInstance,
    DimensionMismatch,
    EmptyTrajectory,
    InconsistentSupport,
    Infeasible,
    LengthMismatch,
    MaxIterations,
    MissingDiagonal,
    NegativeEntry,
    NonPositivePi,
    NotConverged,
    NumericalBreakdown,
    PatternNotSymmetric,
    RevMarkovError,
    TooLarge,
    ZeroRow,
)
from .experiments import (
    BenchmarkConfig,
    LangevinConfig,
    count_matrix,
    gen_random_chain,
    langevin_trajectory,
    run_benchmark,
    torsion_potential,
    torsion_potential_gradient,
)
from .pipeline import (
    ClassReport,
    PipelineDiagnostics,
    PipelineOptions,
    nearest_sparse_reversible,
    verify,
)
from .qp_build import (
    IndexMaps,
    ReducedQP,
    apply_reduced_operator,
    build_index_maps,
    build_reduced_qp,
    expand_symmetric,
    unscale_solution,
    weighting_vector,
)
from .qp_solve import (
    KKTResiduals,
    SolverOptions,
    SolverResult,
    SolverVariant,
    feasible_start,
    kkt_residuals,
    oracle_solve,
    solve_qp,
    solve_with_external,
)
from .reversibilize import (
    AcceptanceRule,
    mh_baseline_distance,
    proposal_from_pattern,
    reversibilize,
)
from .sparse_core import (
    ProbabilityVector,
    SparseStochasticMatrix,
    SparsityPattern,
    detailed_balance_residual,
    frobenius_distance,
    row_normalize,
    stationarity_residual,
    stochasticity_residual,
    symmetrized_pattern,
)

__version__ = "0.1.0"
