"""Hamiltonian-path constructors over multivariate samples.

Three constructors produce a :class:`Path` — an ordering of all units:

* :func:`greedy_path` — distance-driven heuristics (``greedy_edge`` accepts
  shortest edges subject to path constraints; ``nn_chain`` grows a chain from
  the globally closest pair by nearest-endpoint extension);
* :func:`hilbert_path` — sorts units along a Hilbert space-filling curve,
  requiring coordinates rather than distances;
* :func:`exact_path` — the shortest Hamiltonian path by Held-Karp dynamic
  programming, feasible only for small N.

All constructors are deterministic, with documented tie-breaking rules, so a
given input always yields the same path.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from ._kernels import greedy_edge_accept, held_karp_fill
from .data import validate_distance_matrix
from .errors import CapacityError, ValidationError

__all__ = ["Path", "exact_path", "greedy_path", "hilbert_path", "path_length"]

_MAX_EXACT_UNITS = 16
_GREEDY_VARIANTS = ("greedy_edge", "nn_chain")


@dataclass(frozen=True)
class Path:
    """An ordering of all N units plus the traversal length.

    Attributes
    ----------
    order : ndarray of int, shape (N,)
        Permutation of ``0..N-1``; ``order[t]`` is the unit visited at step t.
    method : str
        Constructor that produced the path.
    total_length : float
        Sum of consecutive distances along ``order``.
    """

    order: np.ndarray
    method: str
    total_length: float

    def __post_init__(self) -> None:
        order = np.asarray(self.order, dtype=np.int64)
        if order.ndim != 1 or order.size == 0:
            raise ValidationError("path order must be a non-empty 1-d array")
        seen = np.zeros(order.size, dtype=bool)
        if order.min() < 0 or order.max() >= order.size:
            raise ValidationError("path order must be a permutation of 0..N-1")
        seen[order] = True
        if not seen.all():
            raise ValidationError("path order must be a permutation of 0..N-1")
        object.__setattr__(self, "order", order)
        object.__setattr__(self, "total_length", float(self.total_length))

    @property
    def n_units(self) -> int:
        return self.order.shape[0]


def path_length(D: np.ndarray, order: np.ndarray) -> float:
    """Traversal length of ``order`` under distance matrix ``D``."""
    D = validate_distance_matrix(D)
    order = np.asarray(order, dtype=np.int64)
    if order.shape != (D.shape[0],):
        raise ValidationError("order length does not match the distance matrix")
    seen = np.zeros(order.size, dtype=bool)
    if order.min() < 0 or order.max() >= order.size:
        raise ValidationError("order must be a permutation of 0..N-1")
    seen[order] = True
    if not seen.all():
        raise ValidationError("order must be a permutation of 0..N-1")
    return float(D[order[:-1], order[1:]].sum())


def _require_at_least_two(n: int) -> None:
    if n < 2:
        raise ValidationError("a path requires at least 2 units")


def greedy_path(D: np.ndarray, variant: str = "greedy_edge") -> Path:
    """Short Hamiltonian path by greedy construction on a distance matrix.

    Parameters
    ----------
    D : ndarray, shape (N, N)
        Validated symmetric distance matrix.
    variant : {"greedy_edge", "nn_chain"}
        ``greedy_edge`` scans edges by ascending ``(distance, i, j)`` and
        accepts each edge whose endpoints still have degree < 2 and whose
        addition creates no cycle, stopping at N-1 accepted edges.
        ``nn_chain`` starts from the globally closest pair (same ordering of
        ties) and repeatedly attaches the nearest unused unit to whichever
        chain endpoint is closer; equal distances are broken toward the
        smaller candidate index, then toward the head of the chain.

    Returns
    -------
    Path
        The traversal runs from the accepted path's endpoint with the smaller
        unit index (``greedy_edge``) or in chain order (``nn_chain``).
    """
    D = validate_distance_matrix(D)
    n = D.shape[0]
    _require_at_least_two(n)
    if variant not in _GREEDY_VARIANTS:
        raise ValidationError(
            f"unknown greedy variant {variant!r}; expected one of {_GREEDY_VARIANTS}"
        )
    iu, ju = np.triu_indices(n, k=1)
    dvals = D[iu, ju]
    srt = np.lexsort((ju, iu, dvals))
    if variant == "greedy_edge":
        ci, cj, taken = greedy_edge_accept(
            iu[srt].astype(np.int64), ju[srt].astype(np.int64), n
        )
        if taken != n - 1:
            raise RuntimeError("greedy edge scan failed to produce a spanning path")
        adjacency = np.full((n, 2), -1, dtype=np.int64)
        degree = np.zeros(n, dtype=np.int64)
        for a, b in zip(ci, cj):
            adjacency[a, degree[a]] = b
            adjacency[b, degree[b]] = a
            degree[a] += 1
            degree[b] += 1
        endpoints = np.nonzero(degree == 1)[0]
        order = np.empty(n, dtype=np.int64)
        prev = -1
        cur = int(endpoints.min()) if n > 1 else 0
        for t in range(n):
            order[t] = cur
            nxt = adjacency[cur, 0] if adjacency[cur, 0] != prev else adjacency[cur, 1]
            prev, cur = cur, int(nxt)
        method = "greedy_edge"
    else:
        first = srt[0]
        chain = deque((int(iu[first]), int(ju[first])))
        used = np.zeros(n, dtype=bool)
        used[chain[0]] = used[chain[-1]] = True
        for _ in range(n - 2):
            head, tail = chain[0], chain[-1]
            dh = np.where(used, np.inf, D[head])
            dt = np.where(used, np.inf, D[tail])
            vh = int(np.argmin(dh))
            vt = int(np.argmin(dt))
            if dh[vh] < dt[vt] or (dh[vh] == dt[vt] and vh <= vt):
                chain.appendleft(vh)
                used[vh] = True
            else:
                chain.append(vt)
                used[vt] = True
        order = np.fromiter(chain, dtype=np.int64, count=n)
        method = "nn_chain"
    return Path(order=order, method=method, total_length=path_length(D, order))


def _axes_to_transpose(X: np.ndarray, bits: int) -> np.ndarray:
    """Convert integer coordinates to Hilbert transpose form, per point.

    ``X`` has shape (N, d) with entries in ``[0, 2**bits)``; the rows are
    transformed in place following the Skilling bit-manipulation scheme, after
    which interleaving the rows' bits (most significant first, dimension-major)
    yields each point's position along the Hilbert curve.
    """
    ndim = X.shape[1]
    M = 1 << (bits - 1)
    Q = M
    while Q > 1:
        P = Q - 1
        for i in range(ndim):
            hasq = (X[:, i] & Q) != 0
            X[hasq, 0] ^= P
            rest = ~hasq
            t = (X[rest, 0] ^ X[rest, i]) & P
            X[rest, 0] ^= t
            X[rest, i] ^= t
        Q >>= 1
    for i in range(1, ndim):
        X[:, i] ^= X[:, i - 1]
    t = np.zeros(X.shape[0], dtype=np.int64)
    Q = M
    while Q > 1:
        hasq = (X[:, ndim - 1] & Q) != 0
        t[hasq] ^= Q - 1
        Q >>= 1
    X ^= t[:, None]
    return X


def hilbert_path(data: np.ndarray, bits_per_dim: int = 10) -> Path:
    """Order units along a Hilbert space-filling curve.

    Each coordinate is min-max scaled to an integer grid of ``2**bits_per_dim``
    cells (constant columns collapse to 0), the grid cells are mapped to
    positions along the Hilbert curve, and units are sorted by position with
    ties broken by unit index.  One-dimensional data is simply sorted in
    ascending coordinate order.  The reported length sums the Euclidean
    distances between consecutive units in the original coordinates.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2:
        raise ValidationError("data must be a 2-d matrix")
    if not np.all(np.isfinite(data)):
        raise ValidationError("data must be finite")
    n, ndim = data.shape
    _require_at_least_two(n)
    if not isinstance(bits_per_dim, (int, np.integer)) or isinstance(bits_per_dim, bool):
        raise ValidationError("bits_per_dim must be an integer")
    if not 1 <= bits_per_dim <= 31:
        raise ValidationError("bits_per_dim must be between 1 and 31")
    if ndim == 1:
        order = np.lexsort((np.arange(n), data[:, 0]))
    else:
        top = (1 << bits_per_dim) - 1
        cmin = data.min(axis=0)
        span = data.max(axis=0) - cmin
        scaled = np.zeros((n, ndim), dtype=np.float64)
        nonconst = span > 0
        scaled[:, nonconst] = (data[:, nonconst] - cmin[nonconst]) / span[nonconst]
        X = np.clip(np.rint(scaled * top), 0, top).astype(np.int64)
        X = _axes_to_transpose(X, int(bits_per_dim))
        # Interleave the transpose-form bits, dimension-major from the most
        # significant level, into 64-bit key words.
        total_bits = int(bits_per_dim) * ndim
        n_words = (total_bits + 63) // 64
        words = np.zeros((n, n_words), dtype=np.uint64)
        for pos in range(total_bits):
            level = bits_per_dim - 1 - (pos // ndim)
            dim = pos % ndim
            bit = ((X[:, dim] >> level) & 1).astype(np.uint64)
            shift = np.uint64(63 - (pos % 64))
            words[:, pos // 64] |= bit << shift
        keys = (np.arange(n),) + tuple(
            words[:, w] for w in range(n_words - 1, -1, -1)
        )
        order = np.lexsort(keys)
    order = order.astype(np.int64)
    steps = data[order[1:]] - data[order[:-1]]
    total = float(np.sqrt(np.einsum("ij,ij->i", steps, steps)).sum())
    return Path(order=order, method="hilbert", total_length=total)


def exact_path(D: np.ndarray) -> Path:
    """Shortest Hamiltonian path by exact dynamic programming.

    Raises :class:`CapacityError` beyond N = 16 (the table holds 2**N * N
    entries).  Among equally short paths the lexicographically smallest order
    is returned, which is well defined whenever tied path lengths are exact
    floating-point equals (e.g. integer-valued distances).
    """
    D = validate_distance_matrix(D)
    n = D.shape[0]
    _require_at_least_two(n)
    if n > _MAX_EXACT_UNITS:
        raise CapacityError(
            f"exact search supports at most {_MAX_EXACT_UNITS} units (got {n}); "
            "use a greedy or Hilbert path instead"
        )
    dp = held_karp_fill(D)
    full = (1 << n) - 1
    # dp[mask, j] is the cost of the best path over `mask` ending at j, which
    # by symmetry of D equals the best path starting at j.  Greedy extraction
    # of the cheapest continuation, ties to the smallest index, therefore
    # yields the lexicographically smallest optimal order.
    order = np.empty(n, dtype=np.int64)
    cur = int(np.argmin(dp[full]))
    order[0] = cur
    mask = full ^ (1 << cur)
    for t in range(1, n):
        best_v = -1
        best_c = np.inf
        for v in range(n):
            if mask >> v & 1:
                c = D[cur, v] + dp[mask, v]
                if c < best_c:
                    best_c = c
                    best_v = v
        order[t] = best_v
        mask ^= 1 << best_v
        cur = best_v
    return Path(order=order, method="exact", total_length=path_length(D, order))
