"""k-nearest-neighbor digraphs and exact non-bipartite matchings.

Two graph families over the units of a sample:

* :func:`knn_graph` — the directed graph in which every unit points to its k
  nearest other units (euclidean distance on the given coordinates, ties by
  smaller index), with interchangeable exact backends;
* :func:`nbm_matching` — the exact minimum-weight perfect matching of the
  complete distance graph (non-bipartite matching), with a phantom unit
  handling odd sample sizes.

:func:`graph_functionals` extracts the two combinatorial counts of a kNN
graph that drive its permutation-null moments: the number of mutual-neighbor
pairs and the number of pairs of units selecting a common neighbor.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from ._mwmatch import min_weight_perfect_matching
from .data import pairwise_distances, validate_distance_matrix
from .errors import ValidationError

__all__ = [
    "GraphFunctionals",
    "KnnGraph",
    "Matching",
    "graph_functionals",
    "knn_graph",
    "nbm_matching",
]

_KNN_BACKENDS = ("kd_tree", "brute_force")


@dataclass(frozen=True)
class KnnGraph:
    """Directed k-nearest-neighbor graph.

    Attributes
    ----------
    neighbors : ndarray of int, shape (N, k)
        ``neighbors[i]`` lists the k nearest other units of unit i, ordered
        by (distance, index).
    k : int
        Number of neighbors per unit.
    """

    neighbors: np.ndarray
    k: int

    def __post_init__(self) -> None:
        neighbors = np.asarray(self.neighbors, dtype=np.int64)
        if neighbors.ndim != 2:
            raise ValidationError("neighbors must be an N x k matrix")
        n, k = neighbors.shape
        if k != self.k:
            raise ValidationError("neighbor matrix width disagrees with k")
        if not 1 <= k <= n - 1:
            raise ValidationError("k must satisfy 1 <= k <= N-1")
        if neighbors.min() < 0 or neighbors.max() >= n:
            raise ValidationError("neighbor indices out of range")
        if np.any(neighbors == np.arange(n)[:, None]):
            raise ValidationError("a unit may not neighbor itself")
        for row in neighbors:
            if np.unique(row).size != k:
                raise ValidationError("neighbor rows must not repeat a unit")
        object.__setattr__(self, "neighbors", neighbors)

    @property
    def n_units(self) -> int:
        return self.neighbors.shape[0]

    def adjacency(self) -> np.ndarray:
        """Dense boolean adjacency matrix M with M[i, j] = 1 iff i selects j."""
        n, k = self.neighbors.shape
        M = np.zeros((n, n), dtype=bool)
        M[np.repeat(np.arange(n), k), self.neighbors.ravel()] = True
        return M


@dataclass(frozen=True)
class Matching:
    """A pairing of units (perfect up to one optional dropped unit).

    Attributes
    ----------
    pairs : ndarray of int, shape (m, 2)
        Disjoint unordered pairs, each row sorted, rows sorted by first entry.
    dropped_unit : int or None
        The unit left unmatched when N is odd.
    total_weight : float
        Sum of the pair distances.
    """

    pairs: np.ndarray
    dropped_unit: int | None
    total_weight: float

    def __post_init__(self) -> None:
        pairs = np.asarray(self.pairs, dtype=np.int64)
        if pairs.ndim != 2 or pairs.shape[1] != 2:
            raise ValidationError("pairs must be an m x 2 matrix")
        flat = pairs.ravel()
        members = set(flat.tolist())
        if len(members) != flat.size:
            raise ValidationError("matching pairs must be disjoint")
        if self.dropped_unit is not None and self.dropped_unit in members:
            raise ValidationError("dropped unit may not appear in a pair")
        object.__setattr__(self, "pairs", pairs)
        object.__setattr__(self, "total_weight", float(self.total_weight))

    @property
    def n_retained(self) -> int:
        return 2 * self.pairs.shape[0]


@dataclass(frozen=True)
class GraphFunctionals:
    """The two combinatorial counts governing kNN-count null moments.

    Attributes
    ----------
    mutual_pairs : int
        Unordered pairs {i, j} where each unit lists the other as a neighbor.
    shared_neighbor_pairs : int
        Sum over units of C(indegree, 2): unordered pairs of units that
        select a common neighbor.
    """

    mutual_pairs: int
    shared_neighbor_pairs: int


def knn_graph(data: np.ndarray, k: int, backend: str = "kd_tree") -> KnnGraph:
    """Build the k-nearest-neighbor digraph of the sample.

    Each unit's neighbor list holds the k nearest other units by euclidean
    distance on the given coordinates, ordered by (distance, index) so that
    distance ties resolve to the smaller unit index.  Both backends implement
    that rule exactly and return identical graphs; ``kd_tree`` avoids the
    dense distance matrix, ``brute_force`` is the transparent reference.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2:
        raise ValidationError("data must be an N x d matrix with N >= 2")
    if not np.all(np.isfinite(data)):
        raise ValidationError("data must be finite")
    n = data.shape[0]
    if not 1 <= k <= n - 1:
        raise ValidationError(f"k must satisfy 1 <= k <= N-1, got k={k}, N={n}")
    if backend not in _KNN_BACKENDS:
        raise ValidationError(
            f"unknown backend {backend!r}; expected one of {_KNN_BACKENDS}"
        )
    if backend == "brute_force":
        D = pairwise_distances(data)
        order = np.argsort(D, axis=1, kind="stable")
        keep = order != np.arange(n)[:, None]
        neighbors = order[keep].reshape(n, n - 1)[:, :k]
    else:
        tree = cKDTree(data)
        dist, _ = tree.query(data, k=k + 1)
        # Candidate sets: everything within the k-th other-unit distance,
        # inflated to absorb float differences between the tree's distance
        # arithmetic and the reference row formula used for ranking below.
        radii = dist[:, -1] * (1.0 + 1e-9)
        balls = tree.query_ball_point(data, radii)
        neighbors = np.empty((n, k), dtype=np.int64)
        for i, cand in enumerate(balls):
            cand = np.asarray(cand, dtype=np.int64)
            cand = cand[cand != i]
            diff = data[cand] - data[i]
            dcand = np.sqrt(np.einsum("ij,ij->i", diff, diff))
            sel = np.lexsort((cand, dcand))[:k]
            neighbors[i] = cand[sel]
    return KnnGraph(neighbors=neighbors, k=int(k))


def graph_functionals(graph: KnnGraph) -> GraphFunctionals:
    """Count mutual-neighbor pairs and shared-neighbor pairs of a kNN graph."""
    M = graph.adjacency()
    mutual = int(np.triu(M & M.T, k=1).sum())
    indegree = M.sum(axis=0).astype(np.int64)
    shared = int((indegree * (indegree - 1) // 2).sum())
    return GraphFunctionals(mutual_pairs=mutual, shared_neighbor_pairs=shared)


def nbm_matching(D: np.ndarray) -> Matching:
    """Exact minimum-weight non-bipartite matching of all units.

    For even N this is the minimum-weight perfect matching of the complete
    distance graph.  For odd N a phantom unit at identical distance
    ``1 + max(D)`` from every real unit is appended; the phantom's optimal
    partner becomes ``dropped_unit`` and is excluded from the pairs, so the
    retained pairs form the minimum-weight matching that leaves one unit out
    (the equidistant phantom makes the choice a pure optimization byproduct).
    """
    D = validate_distance_matrix(D)
    n = D.shape[0]
    if n < 2:
        raise ValidationError("a matching requires at least 2 units")
    dropped: int | None = None
    if n % 2 == 1:
        phantom = 1.0 + float(D.max())
        padded = np.full((n + 1, n + 1), phantom)
        padded[:n, :n] = D
        np.fill_diagonal(padded, 0.0)
        mate, _ = min_weight_perfect_matching(padded)
        dropped = int(mate[n])
        mate = mate[:n]
        mate[dropped] = -1
    else:
        mate, _ = min_weight_perfect_matching(D)
    left = np.nonzero((mate > np.arange(n)) & (mate >= 0))[0]
    pairs = np.column_stack((left, mate[left]))
    total = float(D[pairs[:, 0], pairs[:, 1]].sum())
    return Matching(pairs=pairs, dropped_unit=dropped, total_weight=total)
