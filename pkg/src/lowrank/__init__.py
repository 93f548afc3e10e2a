"""Greedy and local-search solvers for rank-constrained convex optimization."""

from .baselines import SoftImputeConfig, soft_impute
from .data import (RatingsDataset, SynthCompletionConfig, SynthRpcaConfig,
                   gen_completion, gen_rpca, load_movielens, nmse_on, rmse_on,
                   split_ratings)
from .inner import InnerConfig, optimize_fast, optimize_full
from .linalg import (FactorPair, LinearOp, SingularTriplet, SparseObservations,
                     frobenius_norm, project_observed, spectral_norm_estimate,
                     svd_threshold, top_singular_triplet)
from .objectives import (ClippedObservedQuadratic, GradientHandle, HuberLowRank,
                         ObservedQuadratic)
from .solvers import (IterationTrace, SolverConfig, fast_greedy,
                      fast_local_search, greedy, local_search, truncate_fast,
                      truncate_svd)
from .sparse_equiv import (SparseRegressionProblem, check_equivalence,
                           lift_diagonal, omp, ompr)

__version__ = "0.1.0"
