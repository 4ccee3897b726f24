"""Wald and extremum hypothesis tests of multisample distributional balance.

:func:`balance_test` is the end-to-end entry point: given a labeled dataset
it builds the graph structure a method requires (kNN graph, non-bipartite
matching, or Hamiltonian path), computes the statistic vector, obtains null
moments (closed-form where available, permutation-estimated for crossmatch)
and assembles a :class:`TestReport`.

The two generic test forms are exposed directly:

* :func:`wald_test` — quadratic form T = (S-mu)' Sigma^+ (S-mu) against a
  chi-square reference, with a degrees-of-freedom policy;
* :func:`extremum_test` — T = max(U) or min(U) of a standardized vector,
  with the tail probability under the multivariate normal null estimated by
  Monte Carlo.

Canonical extremum directions: kNN counts reject for large within-group
counts (max); runs and crossmatch reject for few runs / few cross-group
pairs (min).  Count-valued statistics receive a 0.5 continuity correction
toward the null in their standardized forms.
"""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .data import Dataset, pairwise_distances
from .errors import ConfigurationError, DegenerateStatisticError, ValidationError
from .neighbors import graph_functionals, knn_graph, nbm_matching
from .numerics import RandomStream, chi_square_sf, mvn_extremum_sf, solve_spd_or_pinv
from .paths import exact_path, greedy_path, hilbert_path
from .statistics import (
    crossmatch_counts,
    knn_counts,
    knn_moments,
    knn_standardize,
    kw_rank_statistic,
    permutation_null,
    run_counts,
    run_moments,
)

__all__ = [
    "GraphMeta",
    "TestConfig",
    "TestReport",
    "balance_test",
    "extremum_test",
    "wald_test",
]

METHODS = ("knn", "crossmatch", "runs", "ranks")
FORMS = ("wald", "extremum", "max", "min")
PATH_VARIANTS = ("greedy_edge", "nn_chain", "hilbert", "exact")
DOF_POLICIES = ("full", "minus_one", "rank")

# Direction of departure each method rejects toward.
_CANONICAL_DIRECTION = {"knn": "max", "crossmatch": "min", "runs": "min"}

_PERMUTATION_STREAM = 1
_EXTREMUM_STREAM = 2


@dataclass(frozen=True)
class GraphMeta:
    """Provenance of the graph structure behind a test report."""

    method: str
    k: int | None
    n_units: int
    group_sizes: tuple[int, ...]
    seed: int | None
    dropped_unit: int | None
    path_variant: str | None = None
    metric: str = "euclidean"


@dataclass(frozen=True)
class TestReport:
    """Outcome of a balance test.

    ``test_form`` is "wald" for quadratic-form tests and "max"/"min" for
    extremum tests; ``dof`` is present exactly for the Wald form, and
    ``mc_se`` whenever the p-value was estimated by Monte Carlo.
    """

    __test__ = False  # not a pytest class, despite the Test* name

    statistic_kind: str
    test_form: str
    statistic: float
    dof: int | None
    p_value: float
    mc_se: float | None
    moment_source: str
    graph_meta: GraphMeta | None = None

    def __post_init__(self) -> None:
        if self.test_form not in ("wald", "max", "min"):
            raise ValidationError(f"invalid test form {self.test_form!r}")
        if (self.dof is not None) != (self.test_form == "wald"):
            raise ValidationError("dof must be present exactly for Wald tests")
        if not 0.0 <= self.p_value <= 1.0:
            raise ValidationError("p_value must lie in [0, 1]")
        if self.moment_source not in ("analytic", "exhaustive", "monte_carlo"):
            raise ValidationError(f"invalid moment source {self.moment_source!r}")
        object.__setattr__(self, "statistic", float(self.statistic))
        object.__setattr__(self, "p_value", float(self.p_value))


@dataclass(frozen=True)
class TestConfig:
    """Tuning knobs for :func:`balance_test`.

    ``k`` defaults to floor(0.1 N) (at least 1, at most N-1) when left None.
    ``seed`` drives every random element (permutation draws and the extremum
    Monte Carlo) through derived streams, so reports are reproducible.
    """

    __test__ = False  # not a pytest class, despite the Test* name

    k: int | None = None
    path_variant: str = "greedy_edge"
    metric: str = "euclidean"
    n_mc: int = 100_000
    permutation_draws: int = 10_000
    seed: int = 0
    knn_backend: str = "kd_tree"

    def __post_init__(self) -> None:
        if self.path_variant not in PATH_VARIANTS:
            raise ConfigurationError(
                f"path_variant must be one of {PATH_VARIANTS}, got {self.path_variant!r}"
            )
        if self.metric not in ("euclidean", "standardized_euclidean"):
            raise ConfigurationError(f"unknown metric {self.metric!r}")
        if self.permutation_draws < 1:
            raise ConfigurationError("permutation_draws must be positive")
        if self.n_mc < 1:
            raise ConfigurationError("n_mc must be positive")
        if self.k is not None and self.k < 1:
            raise ConfigurationError("k must be at least 1 when given")
        if self.knn_backend not in ("kd_tree", "brute_force"):
            raise ConfigurationError(f"unknown knn_backend {self.knn_backend!r}")


def default_k(n_units: int) -> int:
    """The default neighbor count: floor(0.1 N), clipped to [1, N-1]."""
    return int(min(max(n_units // 10, 1), n_units - 1))


def wald_test(
    S: np.ndarray,
    mu: np.ndarray,
    Sigma: np.ndarray,
    dof_policy: str,
    statistic_kind: str = "unspecified",
    moment_source: str = "analytic",
    graph_meta: GraphMeta | None = None,
) -> TestReport:
    """Quadratic-form test T = (S-mu)' Sigma^+ (S-mu) with chi-square reference.

    ``dof_policy`` selects the reference degrees of freedom: ``full`` uses the
    vector dimension m, ``minus_one`` uses m-1, and ``rank`` uses the numerical
    rank of Sigma (for statistics whose components satisfy exact linear
    constraints, making Sigma singular).  Singular Sigma is handled by the
    minimum-norm pseudo-inverse solve in all policies.
    """
    S = np.asarray(S, dtype=np.float64)
    mu = np.asarray(mu, dtype=np.float64)
    Sigma = np.asarray(Sigma, dtype=np.float64)
    if S.ndim != 1 or S.shape != mu.shape or Sigma.shape != (S.size, S.size):
        raise ValidationError("wald_test dimensions disagree")
    if dof_policy not in DOF_POLICIES:
        raise ValidationError(
            f"dof_policy must be one of {DOF_POLICIES}, got {dof_policy!r}"
        )
    diff = S - mu
    solution, rank = solve_spd_or_pinv(Sigma, diff)
    t = float(max(diff @ solution, 0.0))
    if dof_policy == "full":
        dof = S.size
    elif dof_policy == "minus_one":
        dof = S.size - 1
    else:
        dof = rank
    if dof < 1:
        raise DegenerateStatisticError(
            "Wald test degenerate: zero degrees of freedom after rank reduction"
        )
    return TestReport(
        statistic_kind=statistic_kind,
        test_form="wald",
        statistic=t,
        dof=dof,
        p_value=chi_square_sf(t, dof),
        mc_se=None,
        moment_source=moment_source,
        graph_meta=graph_meta,
    )


def extremum_test(
    U: np.ndarray,
    Omega: np.ndarray,
    direction: str,
    n_mc: int = 100_000,
    rng: RandomStream | np.random.Generator | None = None,
    statistic_kind: str = "unspecified",
    moment_source: str = "analytic",
    graph_meta: GraphMeta | None = None,
) -> TestReport:
    """Extremum test T = max(U) or min(U) of a standardized vector.

    The p-value is the tail probability of the extremum under a centered
    multivariate normal with correlation ``Omega``, estimated by Monte Carlo
    (:func:`mvn_extremum_sf`); its binomial standard error is reported.
    """
    U = np.asarray(U, dtype=np.float64)
    if direction not in ("max", "min"):
        raise ValidationError("direction must be 'max' or 'min'")
    t = float(U.max() if direction == "max" else U.min())
    gen = rng.generator if isinstance(rng, RandomStream) else rng
    p, se = mvn_extremum_sf(t, Omega, direction, n_mc=n_mc, rng=gen)
    return TestReport(
        statistic_kind=statistic_kind,
        test_form=direction,
        statistic=t,
        dof=None,
        p_value=p,
        mc_se=se,
        moment_source=moment_source,
        graph_meta=graph_meta,
    )


def _correlation_from_covariance(cov: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    sd = np.sqrt(np.diagonal(cov))
    zero = np.nonzero(sd <= 0.0)[0]
    if zero.size:
        raise DegenerateStatisticError(
            f"component {zero[0]} has zero null variance; cannot standardize"
        )
    corr = cov / np.outer(sd, sd)
    np.fill_diagonal(corr, 1.0)
    return sd, corr


def _effective_data(dataset: Dataset, metric: str) -> np.ndarray:
    """Coordinates under which euclidean distance realizes the metric."""
    if metric == "euclidean":
        return dataset.data
    sd = dataset.data.std(axis=0, ddof=1)
    zero = np.nonzero(sd <= 0.0)[0]
    if zero.size:
        raise ValidationError(
            f"column {zero[0]} has zero sample variance under standardized_euclidean"
        )
    return dataset.data / sd


def _build_path(data_eff: np.ndarray, variant: str):
    if variant == "hilbert":
        return hilbert_path(data_eff)
    D = pairwise_distances(data_eff)
    if variant == "exact":
        return exact_path(D)
    return greedy_path(D, variant=variant)


def _resolve_form(method: str, form: str) -> str:
    if form not in FORMS:
        raise ConfigurationError(f"form must be one of {FORMS}, got {form!r}")
    if method == "ranks":
        if form != "wald":
            raise ConfigurationError("the ranks method supports only the Wald form")
        return "wald"
    if form == "extremum":
        return _CANONICAL_DIRECTION[method]
    return form


def balance_test(
    dataset: Dataset,
    method: str,
    form: str = "wald",
    config: TestConfig | None = None,
) -> TestReport:
    """Test whether the group label distributions are exchangeable.

    Parameters
    ----------
    dataset : Dataset
        Covariates plus labels (G >= 2 groups).
    method : {"knn", "crossmatch", "runs", "ranks"}
        Graph structure and statistic: kNN within-group counts, cross-group
        matched-pair counts, same-label runs along a path, or path-position
        ranks (Kruskal-Wallis).
    form : {"wald", "extremum", "max", "min"}
        ``extremum`` resolves to each method's canonical rejection direction
        (knn: max; crossmatch and runs: min); ranks supports only ``wald``.
    config : TestConfig
        Graph and randomness knobs; the default config has seed 0.
    """
    if method not in METHODS:
        raise ConfigurationError(f"method must be one of {METHODS}, got {method!r}")
    config = config or TestConfig()
    if dataset.n_groups < 2:
        raise ConfigurationError("balance tests require at least 2 groups")
    resolved = _resolve_form(method, form)
    n = dataset.n_units
    sizes = dataset.group_sizes
    labels = dataset.labels
    data_eff = _effective_data(dataset, config.metric)
    root = RandomStream(seed=config.seed)
    meta = GraphMeta(
        method=method,
        k=None,
        n_units=n,
        group_sizes=tuple(int(s) for s in sizes),
        seed=config.seed,
        dropped_unit=None,
        path_variant=None,
        metric=config.metric,
    )

    if method == "knn":
        k = config.k if config.k is not None else default_k(n)
        if not 1 <= k <= n - 1:
            raise ConfigurationError(f"k must satisfy 1 <= k <= N-1, got {k}")
        meta = replace(meta, k=int(k))
        graph = knn_graph(data_eff, k, backend=config.knn_backend)
        counts = knn_counts(graph, labels)
        moments = knn_moments(n, sizes, k, graph_functionals(graph))
        u, omega = knn_standardize(counts, moments)
        if resolved == "wald":
            return wald_test(
                u, np.zeros_like(u), omega, "full",
                statistic_kind="knn_counts", moment_source="analytic",
                graph_meta=meta,
            )
        return extremum_test(
            u, omega, resolved, n_mc=config.n_mc,
            rng=root.derive(_EXTREMUM_STREAM),
            statistic_kind="knn_counts", moment_source="analytic",
            graph_meta=meta,
        )

    if method in ("runs", "ranks"):
        meta = replace(meta, path_variant=config.path_variant)
        path = _build_path(data_eff, config.path_variant)
        if method == "ranks":
            h, dof = kw_rank_statistic(path, labels)
            return TestReport(
                statistic_kind="ranks_kw",
                test_form="wald",
                statistic=h,
                dof=dof,
                p_value=chi_square_sf(h, dof),
                mc_se=None,
                moment_source="analytic",
                graph_meta=meta,
            )
        runs = run_counts(path, labels)
        moments = run_moments(n, sizes)
        if resolved == "wald":
            return wald_test(
                runs.values, moments.mean, moments.covariance, "rank",
                statistic_kind="runs", moment_source="analytic",
                graph_meta=meta,
            )
        sd, corr = _correlation_from_covariance(moments.covariance)
        # Few runs signal clustering; 0.5 shifts the integer counts toward
        # the null so the lower-tail lattice is not anti-conservative.
        u = (runs.values + 0.5 - moments.mean) / sd
        return extremum_test(
            u, corr, resolved, n_mc=config.n_mc,
            rng=root.derive(_EXTREMUM_STREAM),
            statistic_kind="runs", moment_source="analytic",
            graph_meta=meta,
        )

    # crossmatch
    D = pairwise_distances(data_eff)
    matching = nbm_matching(D)
    meta = replace(meta, dropped_unit=matching.dropped_unit)
    counts = crossmatch_counts(matching, labels)
    null = permutation_null(
        "crossmatch_pairs", matching, sizes,
        mode="monte_carlo", draws=config.permutation_draws,
        rng=root.derive(_PERMUTATION_STREAM),
    )
    if resolved == "wald":
        return wald_test(
            counts.values, null.empirical_mean, null.empirical_cov, "rank",
            statistic_kind="crossmatch_pairs", moment_source="monte_carlo",
            graph_meta=meta,
        )
    sd, corr = _correlation_from_covariance(null.empirical_cov)
    u = (counts.values + 0.5 - null.empirical_mean) / sd
    return extremum_test(
        u, corr, resolved, n_mc=config.n_mc,
        rng=root.derive(_EXTREMUM_STREAM),
        statistic_kind="crossmatch_pairs", moment_source="monte_carlo",
        graph_meta=meta,
    )
