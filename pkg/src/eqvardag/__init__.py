"""Causal DAG discovery for linear SEMs with equal error variances.

Population-level checks of the supergraph characterisation of the
least-squares minimum, and data-level DAG selection with the closed-form
g-prior evidence or a BIC-type score.
"""

from .errors import (
    CollinearDataError, DegenerateCovarianceError, DeltaStarUndefinedError, EqvarError,
    IncompatibleScoreError, IncompleteTableError, InsufficientSampleError,
    InvalidInputError, NumericalError, ParseError, ResourceCapError,
)
from .graph import (
    CausalOrder, Dag, complete_dag_from_order, dag_masks, enumerate_dags, is_acyclic,
    is_supergraph, nd_under_order, random_dag, topological_order,
)
from .sem import Dataset, ErrorFamily, SemSpec, implied_covariance, random_sem, simulate
from .population import (
    PopulationScore, Theorem1Report, cholesky_diagonal_check, delta_star,
    population_graph_score, population_node_score, verify_theorem1,
)
from .scoring import (
    DagPrior, DagScore, NodeScoreTable, PosteriorResult, bic_score, log_bayes_factor,
    log_marginal, log_marginal_direct, node_rss, posterior_over_dags, score_dag, v_n,
)
from .search import SearchResult, exact_dp_bic, exhaustive_best, greedy_hill_climb
from .io import load_csv, load_dag, load_spec, save_csv, save_spec
from .experiments import ConsistencyReport, ExperimentConfig, run_consistency_experiment

__version__ = "0.1.0"
