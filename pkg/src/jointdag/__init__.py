"""Exact joint MAP estimation of multiple related DAGs by branch-and-cut."""

__version__ = "0.1.0"

from .graphs import (
    Dag,
    DagCollection,
    HyperParams,
    UnitNetwork,
    is_acyclic,
    log_joint_prior_unnormalized,
    log_multiplicity,
    log_regularity,
    objective_value,
    shd,
    total_pairwise_shd,
)
from .scores import (
    DiscreteDataset,
    LocalScoreTable,
    PrunePolicy,
    dirichlet_score,
    make_local_score,
    prune,
    table_from_datasets,
)
from .ilp import (
    IlpInstance,
    LinearConstraint,
    MalformedAssignmentError,
    VarSpace,
    build_known_network,
    build_unknown_network,
    count_variables,
    decode,
    encode,
    write_lp,
)
from .solver import (
    SolveOptions,
    SolveResult,
    branch_select,
    brute_force,
    enumerate_dags,
    lp_relax,
    propagate,
    rounding_heuristic,
    separate_clusters,
    solve,
    solve_topn,
)
from .simulate import (
    SimConfig,
    diagnostics,
    sample_dags_mcmc,
    sample_network,
    synth_scores,
    worst_case_scores,
)
from .evaluate import (
    Confusion,
    aic,
    confusion_dags,
    confusion_network,
    grid_search,
    mcc,
)

__all__ = [name for name in dir() if not name.startswith("_")]
