"""priordag: prior-regularized score-based causal structure learning.

Learn directed acyclic graphs from observational data with a decomposable
BIC score (greedy hill-climbing) or a continuous acyclicity-constrained
least-squares objective, optionally pulled toward externally supplied prior
graphs through a weighted l1/l2 penalty.  Ships benchmark networks, a forward
sampler, and SHD/TPR/FDR evaluation.
"""

from .benchmarks import (
    BUNDLED_NETWORKS,
    BayesNet,
    GroundTruth,
    forward_sample,
    load_ground_truth,
    load_network,
    load_observations,
)
from .datasets import CONTINUOUS, DISCRETE, Dataset, VariableMeta
from .graphs import (
    AdjacencyMatrix,
    GraphError,
    is_acyclic,
    parent_set,
    threshold,
)
from .metrics import EvalReport, evaluate
from .notears import NotearsConfig, h_acyclicity, ls_objective, prior_penalty_grad
from .notears import solve as notears_solve
from .priors import (
    FixtureBackend,
    HttpChatBackend,
    PriorEnsemble,
    PriorGraph,
    QueryTranscript,
    compute_weights,
    load_prior_file,
    parse_statements,
    run_query_pipeline,
)
from .scoring import (
    BicScorer,
    ScoreConfig,
    augmented_score,
    bic_local,
    bic_total,
    penalty_l1,
    penalty_l2,
    penalty_local,
)
from .search import (
    Move,
    SearchConfig,
    SearchResult,
    exhaustive_search,
    greedy_search,
    score_delta,
)

__version__ = "0.1.0"

__all__ = [
    "AdjacencyMatrix",
    "BUNDLED_NETWORKS",
    "BayesNet",
    "BicScorer",
    "CONTINUOUS",
    "DISCRETE",
    "Dataset",
    "EvalReport",
    "FixtureBackend",
    "GraphError",
    "GroundTruth",
    "HttpChatBackend",
    "Move",
    "NotearsConfig",
    "PriorEnsemble",
    "PriorGraph",
    "QueryTranscript",
    "ScoreConfig",
    "SearchConfig",
    "SearchResult",
    "VariableMeta",
    "augmented_score",
    "bic_local",
    "bic_total",
    "compute_weights",
    "evaluate",
    "exhaustive_search",
    "forward_sample",
    "greedy_search",
    "h_acyclicity",
    "is_acyclic",
    "load_ground_truth",
    "load_network",
    "load_observations",
    "load_prior_file",
    "ls_objective",
    "notears_solve",
    "parent_set",
    "parse_statements",
    "penalty_l1",
    "penalty_l2",
    "penalty_local",
    "prior_penalty_grad",
    "run_query_pipeline",
    "score_delta",
    "threshold",
]
