"""Graph-based multisample tests of distributional balance.

The package builds combinatorial structures over a multivariate sample —
Hamiltonian-style paths, k-nearest-neighbor graphs, and minimum-distance
non-bipartite matchings — and tests whether group labels look randomly
assigned with respect to those structures.  Four statistics are provided
(runs along a path, rank sums along a path, crossmatch pair counts, and
within-group kNN edge counts), each with closed-form or permutation null
moments, Wald and extremum test forms, exact permutation oracles for small
inputs, and a simulation harness for power studies.
"""

from .data import Dataset, group_summary, pairwise_distances, validate_distance_matrix
from .errors import (
    CapacityError,
    ConfigurationError,
    DegenerateStatisticError,
    GraphBalanceError,
    ValidationError,
)
from .estimator import GraphBalanceTest
from .hypotests import (
    GraphMeta,
    TestConfig,
    TestReport,
    balance_test,
    default_k,
    extremum_test,
    wald_test,
)
from .io import CsvSchema, LoadedDataset, read_csv_dataset, report_json, report_to_dict, write_report
from .neighbors import (
    GraphFunctionals,
    KnnGraph,
    Matching,
    graph_functionals,
    knn_graph,
    nbm_matching,
)
from .numerics import (
    RandomStream,
    chi_square_sf,
    f_sf,
    gaussian_vector,
    mvn_extremum_sf,
    solve_spd_or_pinv,
    std_normal_cdf,
)
from .paths import Path, exact_path, greedy_path, hilbert_path, path_length
from .simulate import (
    DiagnosticRow,
    MethodSpec,
    MotivatingDraw,
    PowerRow,
    PowerTable,
    ScenarioConfig,
    gen_gaussian_scenario,
    gen_motivating,
    power_study,
    scenario_dataset,
    univariate_diagnostics,
)
from .statistics import (
    KnnMoments,
    MomentSet,
    PermutationNull,
    StatVector,
    crossmatch_counts,
    knn_counts,
    knn_moments,
    knn_standardize,
    kw_rank_statistic,
    labeling_count,
    permutation_null,
    run_counts,
    run_moments,
)

__version__ = "0.1.0"

__all__ = [
    "CapacityError",
    "ConfigurationError",
    "CsvSchema",
    "Dataset",
    "DegenerateStatisticError",
    "DiagnosticRow",
    "GraphBalanceError",
    "GraphBalanceTest",
    "GraphFunctionals",
    "GraphMeta",
    "KnnGraph",
    "KnnMoments",
    "LoadedDataset",
    "Matching",
    "MethodSpec",
    "MomentSet",
    "MotivatingDraw",
    "Path",
    "PermutationNull",
    "PowerRow",
    "PowerTable",
    "RandomStream",
    "ScenarioConfig",
    "StatVector",
    "TestConfig",
    "TestReport",
    "ValidationError",
    "balance_test",
    "chi_square_sf",
    "crossmatch_counts",
    "default_k",
    "exact_path",
    "extremum_test",
    "f_sf",
    "gaussian_vector",
    "gen_gaussian_scenario",
    "gen_motivating",
    "graph_functionals",
    "greedy_path",
    "group_summary",
    "hilbert_path",
    "knn_counts",
    "knn_graph",
    "knn_moments",
    "knn_standardize",
    "kw_rank_statistic",
    "labeling_count",
    "mvn_extremum_sf",
    "nbm_matching",
    "path_length",
    "pairwise_distances",
    "permutation_null",
    "power_study",
    "read_csv_dataset",
    "report_json",
    "report_to_dict",
    "run_counts",
    "run_moments",
    "scenario_dataset",
    "solve_spd_or_pinv",
    "std_normal_cdf",
    "univariate_diagnostics",
    "validate_distance_matrix",
    "wald_test",
    "write_report",
]
