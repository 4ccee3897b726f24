"""Multisample balance statistics over graphs and their null moments.

Four statistic vectors summarize how group labels distribute over a graph
structure:

* ``knn_counts`` — per-group counts of within-group directed kNN edges;
* ``runs`` — per-group counts of maximal same-label blocks along a path;
* ``ranks_kw`` — the Kruskal-Wallis statistic of path positions;
* ``crossmatch_pairs`` — per-group-pair counts of cross-matched pairs.

Null moments under uniform permutation of the labels come from three
sources: closed forms for kNN counts (driven by the graph functionals) and
for runs (derived from adjacent-pair indicator expectations), and the
permutation distribution itself via :func:`permutation_null`, which supports
exhaustive enumeration on small problems and seeded Monte Carlo otherwise.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator

import numpy as np

from .data import group_summary
from .errors import CapacityError, DegenerateStatisticError, ValidationError
from .neighbors import GraphFunctionals, KnnGraph, Matching
from .numerics import RandomStream
from .paths import Path

__all__ = [
    "KnnMoments",
    "MomentSet",
    "PermutationNull",
    "StatVector",
    "crossmatch_counts",
    "knn_counts",
    "knn_moments",
    "knn_standardize",
    "kw_rank_statistic",
    "labeling_count",
    "permutation_null",
    "run_counts",
    "run_moments",
]

STAT_KINDS = ("runs", "ranks_kw", "crossmatch_pairs", "knn_counts")

_EXHAUSTIVE_CAP = 10**6


@dataclass(frozen=True)
class StatVector:
    """A statistic vector S plus the kind that interprets it.

    ``m`` is G for runs and knn counts, 1 for the rank statistic and
    G(G-1)/2 (pairs in lexicographic order) for crossmatch counts.
    """

    values: np.ndarray
    kind: str

    def __post_init__(self) -> None:
        if self.kind not in STAT_KINDS:
            raise ValidationError(
                f"unknown statistic kind {self.kind!r}; expected one of {STAT_KINDS}"
            )
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size == 0:
            raise ValidationError("statistic values must be a non-empty vector")
        object.__setattr__(self, "values", values)

    @property
    def m(self) -> int:
        return self.values.shape[0]


@dataclass(frozen=True)
class MomentSet:
    """Exact null mean and covariance of a statistic vector."""

    mean: np.ndarray
    covariance: np.ndarray

    def __post_init__(self) -> None:
        mean = np.asarray(self.mean, dtype=np.float64)
        cov = np.asarray(self.covariance, dtype=np.float64)
        if mean.ndim != 1 or cov.shape != (mean.size, mean.size):
            raise ValidationError("moment dimensions disagree")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


@dataclass(frozen=True)
class KnnMoments:
    """Closed-form permutation-null moments of the kNN count vector.

    Attributes
    ----------
    expectation : ndarray, shape (G,)
        E(C_g) = k n_g (n_g - 1) / (N - 1).
    covariance : ndarray, shape (G, G)
        Exact null covariance of the count vector.
    correlation_hat : ndarray, shape (G, G)
        The finite-sample correlation matrix used by the extremum and Wald
        tests; unit diagonal.
    mutual_rate : float
        2 * mutual_pairs / N, the normalized mutual-neighbor count.
    shared_rate : float
        2 * shared_neighbor_pairs / N, the normalized shared-neighbor count.
    """

    expectation: np.ndarray
    covariance: np.ndarray
    correlation_hat: np.ndarray
    mutual_rate: float
    shared_rate: float


def _group_vector(labels: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    labels = np.asarray(labels, dtype=np.int64)
    n_groups, sizes = group_summary(labels)
    return n_groups, sizes, labels


def knn_counts(graph: KnnGraph, labels: np.ndarray) -> StatVector:
    """Count within-group directed edges of the kNN graph, per group.

    C_g is the number of ordered pairs (i, j) where i selects j as a
    neighbor and both units carry label g.
    """
    n_groups, _, labels = _group_vector(labels)
    if labels.size != graph.n_units:
        raise ValidationError("labels length does not match the graph")
    li = np.repeat(labels, graph.k)
    lj = labels[graph.neighbors.ravel()]
    within = li == lj
    counts = np.bincount(li[within], minlength=n_groups + 1)[1:]
    return StatVector(values=counts.astype(np.float64), kind="knn_counts")


def knn_moments(
    n_units: int,
    group_sizes: np.ndarray,
    k: int,
    functionals: GraphFunctionals,
) -> KnnMoments:
    """Closed-form null moments of the kNN count vector.

    For a fixed kNN graph with functionals J (mutual-neighbor pairs) and S
    (shared-neighbor pairs), under uniform permutation of labels with group
    sizes n_g:

    * E(C_g)   = k n_g (n_g-1) / (N-1)
    * Var(C_g) = n_g(n_g-1)(N-n_g)(N-n_g-1) / (N(N-1)(N-2)(N-3)) * f(n_g)
      with f(n) = kN + 2J + (n-2)/(N-n-1) * (2S + kN - k^2 N) - 2k^2 N/(N-1)
    * Cov(C_g, C_h) = n_g(n_g-1) n_h(n_h-1) / (N(N-1)(N-2)(N-3))
      * (2J - 2S + k^2 N (N-3)/(N-1))

    and the finite-sample correlation estimate is
    Omega_gh = R_gh * (2J - 2S + k^2 N(N-3)/(N-1)) / sqrt(f(n_g) f(n_h)),
    R_gh = sqrt(n_g(n_g-1) n_h(n_h-1)) / sqrt((N-n_g)(N-n_g-1)(N-n_h)(N-n_h-1)),
    with unit diagonal.

    Every group must have size >= 2, otherwise its count is degenerate.
    """
    sizes = np.asarray(group_sizes, dtype=np.float64)
    n = float(n_units)
    if np.any(sizes < 2):
        bad = int(np.nonzero(sizes < 2)[0][0]) + 1
        raise DegenerateStatisticError(
            f"group {bad} has fewer than 2 units; its count statistic is degenerate"
        )
    if sizes.sum() != n:
        raise ValidationError("group sizes must sum to the number of units")
    if n_units < 4:
        raise DegenerateStatisticError(
            "kNN count moments require at least 4 units"
        )
    if not 1 <= k <= n_units - 1:
        raise ValidationError("k must satisfy 1 <= k <= N-1")
    two_j = 2.0 * functionals.mutual_pairs
    two_s = 2.0 * functionals.shared_neighbor_pairs
    kf = float(k)

    expectation = kf * sizes * (sizes - 1.0) / (n - 1.0)

    def f_hat(ng: np.ndarray) -> np.ndarray:
        return (
            kf * n
            + two_j
            + (ng - 2.0) / (n - ng - 1.0) * (two_s + kf * n - kf * kf * n)
            - 2.0 * kf * kf * n / (n - 1.0)
        )

    fvals = f_hat(sizes)
    denom = n * (n - 1.0) * (n - 2.0) * (n - 3.0)
    variances = sizes * (sizes - 1.0) * (n - sizes) * (n - sizes - 1.0) / denom * fvals
    cross = two_j - two_s + kf * kf * n * (n - 3.0) / (n - 1.0)
    pair_factor = sizes * (sizes - 1.0)
    covariance = np.outer(pair_factor, pair_factor) / denom * cross
    np.fill_diagonal(covariance, variances)

    with np.errstate(invalid="ignore"):
        r_num = np.sqrt(np.outer(pair_factor, pair_factor))
        r_den = np.sqrt(
            np.outer(
                (n - sizes) * (n - sizes - 1.0),
                (n - sizes) * (n - sizes - 1.0),
            )
        )
        correlation = r_num / r_den * cross / np.sqrt(np.outer(fvals, fvals))
    np.fill_diagonal(correlation, 1.0)

    return KnnMoments(
        expectation=expectation,
        covariance=covariance,
        correlation_hat=correlation,
        mutual_rate=two_j / n,
        shared_rate=two_s / n,
    )


def knn_standardize(
    counts: StatVector, moments: KnnMoments
) -> tuple[np.ndarray, np.ndarray]:
    """Standardize kNN counts: U_g = (C_g - 0.5 - E(C_g)) / sqrt(Var(C_g)).

    The 0.5 is a continuity correction for the integer-valued counts.
    Returns (U, Omega_hat).
    """
    if counts.kind != "knn_counts":
        raise ValidationError("knn_standardize requires a knn_counts vector")
    variances = np.diagonal(moments.covariance)
    if counts.m != moments.expectation.size:
        raise ValidationError("counts and moments dimensions disagree")
    zero = np.nonzero(variances <= 0.0)[0]
    if zero.size:
        raise DegenerateStatisticError(
            f"group {zero[0] + 1} has zero null variance; cannot standardize"
        )
    u = (counts.values - 0.5 - moments.expectation) / np.sqrt(variances)
    return u, moments.correlation_hat


def run_counts(path: Path, labels: np.ndarray) -> StatVector:
    """Count maximal same-label blocks along the path, per group."""
    n_groups, _, labels = _group_vector(labels)
    if labels.size != path.n_units:
        raise ValidationError("labels length does not match the path")
    seq = labels[path.order]
    starts = np.concatenate(([True], seq[1:] != seq[:-1]))
    counts = np.bincount(seq[starts], minlength=n_groups + 1)[1:]
    return StatVector(values=counts.astype(np.float64), kind="runs")


def run_moments(n_units: int, group_sizes: np.ndarray) -> MomentSet:
    """Exact permutation-null mean and covariance of the run-count vector.

    Writing W_g for the number of adjacent same-label pairs along the path
    (so R_g = n_g - W_g), indicator decomposition over adjacent positions
    gives falling-factorial moments:

    * E[W_g]     = (N-1) (n_g)_2 / (N)_2
    * E[W_g^2]   = E[W_g] + 2(N-2)(n_g)_3/(N)_3 + (N-2)(N-3)(n_g)_4/(N)_4
    * E[W_g W_h] = (N-2)(N-3) (n_g)_2 (n_h)_2 / (N)_4   (g != h; overlapping
      adjacent pairs cannot carry two different labels)

    where (x)_m = x(x-1)...(x-m+1).  These forms are certified against
    exhaustive enumeration in the test suite.
    """
    sizes = np.asarray(group_sizes, dtype=np.float64)
    n = float(n_units)
    if np.any(sizes < 1):
        raise ValidationError("group sizes must be positive")
    if sizes.sum() != n:
        raise ValidationError("group sizes must sum to the number of units")
    if n_units < 2:
        raise ValidationError("run moments require at least 2 units")

    def falling(x: np.ndarray, m: int) -> np.ndarray:
        out = np.ones_like(x)
        for step in range(m):
            out = out * (x - step)
        return out

    # Higher-order terms carry zero coefficients at N=2,3, where (N)_3 or
    # (N)_4 would vanish; guard those divisions explicitly.
    fn2 = n * (n - 1.0)
    fn3 = n * (n - 1.0) * (n - 2.0)
    fn4 = n * (n - 1.0) * (n - 2.0) * (n - 3.0)
    e_w = (n - 1.0) * falling(sizes, 2) / fn2
    term3 = 2.0 * (n - 2.0) * falling(sizes, 3) / fn3 if n_units >= 3 else 0.0
    term4 = (n - 2.0) * (n - 3.0) * falling(sizes, 4) / fn4 if n_units >= 4 else 0.0
    e_w2 = e_w + term3 + term4
    mean = sizes - e_w
    var = e_w2 - e_w**2
    if n_units >= 4:
        cross = (n - 2.0) * (n - 3.0) * np.outer(
            falling(sizes, 2), falling(sizes, 2)
        ) / fn4
    else:
        cross = np.zeros((sizes.size, sizes.size))
    covariance = cross - np.outer(e_w, e_w)
    np.fill_diagonal(covariance, var)
    return MomentSet(mean=mean, covariance=covariance)


def kw_rank_statistic(path: Path, labels: np.ndarray) -> tuple[float, int]:
    """Kruskal-Wallis statistic of the path positions, grouped by label.

    Positions along the path are the ranks 1..N (all distinct, so no tie
    correction): H = 12/(N(N+1)) * sum_g n_g (mean_rank_g - (N+1)/2)^2,
    with G-1 degrees of freedom.
    """
    n_groups, sizes, labels = _group_vector(labels)
    if n_groups < 2:
        raise ValidationError("the rank statistic requires at least 2 groups")
    if labels.size != path.n_units:
        raise ValidationError("labels length does not match the path")
    n = labels.size
    rank_of_unit = np.empty(n, dtype=np.float64)
    rank_of_unit[path.order] = np.arange(1, n + 1, dtype=np.float64)
    sums = np.bincount(labels, weights=rank_of_unit, minlength=n_groups + 1)[1:]
    mean_ranks = sums / sizes
    center = (n + 1.0) / 2.0
    h = 12.0 / (n * (n + 1.0)) * float((sizes * (mean_ranks - center) ** 2).sum())
    return h, n_groups - 1


def crossmatch_counts(matching: Matching, labels: np.ndarray) -> StatVector:
    """Count cross-group matched pairs A_gh for every g < h.

    The vector is ordered lexicographically in (g, h); the dropped unit (odd
    N) appears in no pair and therefore contributes nothing.
    """
    n_groups, _, labels = _group_vector(labels)
    if n_groups < 2:
        raise ValidationError("crossmatch counts require at least 2 groups")
    la = labels[matching.pairs[:, 0]]
    lb = labels[matching.pairs[:, 1]]
    lo = np.minimum(la, lb)
    hi = np.maximum(la, lb)
    table = np.zeros((n_groups + 1, n_groups + 1), dtype=np.int64)
    np.add.at(table, (lo, hi), 1)
    values = []
    for g in range(1, n_groups + 1):
        for h in range(g + 1, n_groups + 1):
            values.append(table[g, h])
    return StatVector(values=np.array(values, dtype=np.float64), kind="crossmatch_pairs")


def labeling_count(group_sizes: np.ndarray) -> int:
    """Number of distinct label arrangements, N! / prod(n_g!)."""
    sizes = [int(s) for s in np.asarray(group_sizes)]
    total = math.factorial(sum(sizes))
    for s in sizes:
        total //= math.factorial(s)
    return total


def _multiset_permutations(start: np.ndarray) -> Iterator[np.ndarray]:
    """All distinct permutations of ``start`` in lexicographic order.

    ``start`` must be sorted ascending; the classic next-permutation step
    (find the rightmost ascent, swap with the smallest larger suffix element,
    reverse the suffix) visits every distinct arrangement exactly once.
    """
    a = np.array(start, dtype=np.int64)
    n = a.size
    while True:
        yield a
        i = n - 2
        while i >= 0 and a[i] >= a[i + 1]:
            i -= 1
        if i < 0:
            return
        j = n - 1
        while a[j] <= a[i]:
            j -= 1
        a[i], a[j] = a[j], a[i]
        a[i + 1 :] = a[i + 1 :][::-1]


@dataclass(frozen=True)
class PermutationNull:
    """The permutation distribution of a statistic vector over a fixed graph.

    ``samples`` holds one statistic vector per labeling: all distinct
    labelings (equally weighted) in exhaustive mode, seeded uniform draws in
    monte_carlo mode.  ``empirical_cov`` is the population covariance of the
    full enumeration in exhaustive mode and the ddof=1 sample covariance in
    monte_carlo mode.
    """

    mode: str
    draws: int
    empirical_mean: np.ndarray
    empirical_cov: np.ndarray
    samples: np.ndarray

    def tail_p_value(
        self, observed: float, draw_values: np.ndarray, direction: str
    ) -> float:
        """Tail probability of ``observed`` among per-draw scalar values.

        Exhaustive mode returns the exact tail mass; monte_carlo mode applies
        the add-one correction (1 + #extreme) / (1 + draws) so p > 0.
        """
        if direction not in ("greater", "less"):
            raise ValidationError("direction must be 'greater' or 'less'")
        draw_values = np.asarray(draw_values, dtype=np.float64)
        if draw_values.shape != (self.draws,):
            raise ValidationError("draw_values must hold one value per draw")
        if direction == "greater":
            extreme = draw_values >= observed
        else:
            extreme = draw_values <= observed
        if self.mode == "exhaustive":
            return float(extreme.mean())
        return float((1 + int(extreme.sum())) / (1 + self.draws))


def _structure_units(statistic: str, graph_or_path) -> int:
    if statistic in ("runs", "ranks_kw"):
        if not isinstance(graph_or_path, Path):
            raise ValidationError(f"{statistic} requires a Path")
        return graph_or_path.n_units
    if statistic == "knn_counts":
        if not isinstance(graph_or_path, KnnGraph):
            raise ValidationError("knn_counts requires a KnnGraph")
        return graph_or_path.n_units
    if statistic == "crossmatch_pairs":
        if not isinstance(graph_or_path, Matching):
            raise ValidationError("crossmatch_pairs requires a Matching")
        extra = 0 if graph_or_path.dropped_unit is None else 1
        return graph_or_path.n_retained + extra
    raise ValidationError(
        f"unknown statistic kind {statistic!r}; expected one of {STAT_KINDS}"
    )


def _evaluate_labelings(
    statistic: str, graph_or_path, labelings: np.ndarray, n_groups: int,
    group_sizes: np.ndarray,
) -> np.ndarray:
    """Statistic vectors for a batch of labelings (rows of ``labelings``)."""
    n_draws, n = labelings.shape
    if statistic == "knn_counts":
        graph: KnnGraph = graph_or_path
        ei = np.repeat(np.arange(n), graph.k)
        ej = graph.neighbors.ravel()
        out = np.empty((n_draws, n_groups), dtype=np.float64)
        chunk = max(1, 4_000_000 // max(1, ei.size))
        for lo in range(0, n_draws, chunk):
            li = labelings[lo : lo + chunk, ei]
            lj = labelings[lo : lo + chunk, ej]
            same = li == lj
            for g in range(1, n_groups + 1):
                out[lo : lo + chunk, g - 1] = ((li == g) & same).sum(axis=1)
        return out
    if statistic == "runs":
        path: Path = graph_or_path
        out = np.empty((n_draws, n_groups), dtype=np.float64)
        chunk = max(1, 4_000_000 // max(1, n))
        for lo in range(0, n_draws, chunk):
            seq = labelings[lo : lo + chunk, path.order]
            change = seq[:, 1:] != seq[:, :-1]
            for g in range(1, n_groups + 1):
                out[lo : lo + chunk, g - 1] = (seq[:, 0] == g) + (
                    (seq[:, 1:] == g) & change
                ).sum(axis=1)
        return out
    if statistic == "ranks_kw":
        path = graph_or_path
        rank_of_unit = np.empty(n, dtype=np.float64)
        rank_of_unit[path.order] = np.arange(1, n + 1, dtype=np.float64)
        center = (n + 1.0) / 2.0
        sizes = group_sizes.astype(np.float64)
        out = np.zeros((n_draws, 1), dtype=np.float64)
        chunk = max(1, 4_000_000 // max(1, n))
        for lo in range(0, n_draws, chunk):
            block = labelings[lo : lo + chunk]
            acc = np.zeros(block.shape[0], dtype=np.float64)
            for g in range(1, n_groups + 1):
                sums = (block == g) @ rank_of_unit
                acc += sizes[g - 1] * (sums / sizes[g - 1] - center) ** 2
            out[lo : lo + chunk, 0] = 12.0 / (n * (n + 1.0)) * acc
        return out
    # crossmatch_pairs
    matching: Matching = graph_or_path
    la = labelings[:, matching.pairs[:, 0]]
    lb = labelings[:, matching.pairs[:, 1]]
    lo_lab = np.minimum(la, lb)
    hi_lab = np.maximum(la, lb)
    m = n_groups * (n_groups - 1) // 2
    out = np.empty((n_draws, m), dtype=np.float64)
    idx = 0
    for g in range(1, n_groups + 1):
        for h in range(g + 1, n_groups + 1):
            out[:, idx] = ((lo_lab == g) & (hi_lab == h)).sum(axis=1)
            idx += 1
    return out


def permutation_null(
    statistic: str,
    graph_or_path,
    group_sizes: np.ndarray,
    mode: str = "monte_carlo",
    draws: int = 10_000,
    rng: RandomStream | np.random.Generator | None = None,
) -> PermutationNull:
    """Permutation distribution of a statistic with the structure held fixed.

    Labels are permuted uniformly over arrangements with the given group
    sizes while the graph, path, or matching stays fixed.  ``exhaustive``
    mode enumerates every distinct arrangement (capacity-capped at 10^6);
    ``monte_carlo`` mode draws ``draws`` arrangements from ``rng``.
    """
    sizes = np.asarray(group_sizes, dtype=np.int64)
    if sizes.ndim != 1 or sizes.size == 0 or np.any(sizes < 1):
        raise ValidationError("group sizes must be positive integers")
    n_groups = sizes.size
    n = _structure_units(statistic, graph_or_path)
    if int(sizes.sum()) != n:
        raise ValidationError("group sizes must sum to the number of units")
    if statistic == "ranks_kw" and n_groups < 2:
        raise ValidationError("the rank statistic requires at least 2 groups")
    if statistic == "crossmatch_pairs" and n_groups < 2:
        raise ValidationError("crossmatch counts require at least 2 groups")
    canonical = np.repeat(np.arange(1, n_groups + 1, dtype=np.int64), sizes)
    if mode == "exhaustive":
        total = labeling_count(sizes)
        if total > _EXHAUSTIVE_CAP:
            raise CapacityError(
                f"exhaustive enumeration needs {total} labelings, "
                f"above the cap of {_EXHAUSTIVE_CAP}"
            )
        labelings = np.empty((total, n), dtype=np.int64)
        for row, perm in enumerate(_multiset_permutations(canonical)):
            labelings[row] = perm
        n_draws = total
    elif mode == "monte_carlo":
        if draws < 1:
            raise ValidationError("draws must be positive")
        if rng is None:
            raise ValidationError("monte_carlo mode requires an rng")
        gen = rng.generator if isinstance(rng, RandomStream) else rng
        labelings = gen.permuted(
            np.tile(canonical, (draws, 1)), axis=1
        ).astype(np.int64)
        n_draws = draws
    else:
        raise ValidationError(
            f"mode must be 'exhaustive' or 'monte_carlo', got {mode!r}"
        )
    samples = _evaluate_labelings(statistic, graph_or_path, labelings, n_groups, sizes)
    mean = samples.mean(axis=0)
    centered = samples - mean
    if mode == "exhaustive":
        cov = centered.T @ centered / n_draws
    else:
        cov = centered.T @ centered / (n_draws - 1) if n_draws > 1 else np.zeros(
            (samples.shape[1], samples.shape[1])
        )
    return PermutationNull(
        mode=mode,
        draws=n_draws,
        empirical_mean=mean,
        empirical_cov=cov,
        samples=samples,
    )
