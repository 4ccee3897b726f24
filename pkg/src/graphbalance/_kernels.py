"""Small numba kernels for the path constructors.

These are the only hot inner loops in path construction that do not vectorize
cleanly with numpy: the greedy edge-acceptance scan (union-find plus degree
bookkeeping) and the Held-Karp dynamic-programming table fill.
"""

from __future__ import annotations

import numpy as np
from numba import njit

__all__ = ["greedy_edge_accept", "held_karp_fill"]


@njit(cache=True)
def greedy_edge_accept(order_i, order_j, n):
    """Accept edges in the given order subject to path constraints.

    Edges arrive sorted by (weight, i, j).  An edge is accepted iff both
    endpoints currently have degree < 2 and it does not close a cycle
    (union-find).  Scanning stops once n-1 edges — a Hamiltonian path — are
    accepted.  Returns (chosen_i, chosen_j, count).
    """
    parent = np.arange(n)
    degree = np.zeros(n, dtype=np.int64)
    chosen_i = np.empty(n - 1, dtype=np.int64)
    chosen_j = np.empty(n - 1, dtype=np.int64)
    taken = 0
    for e in range(order_i.shape[0]):
        if taken == n - 1:
            break
        a = order_i[e]
        b = order_j[e]
        if degree[a] >= 2 or degree[b] >= 2:
            continue
        ra = a
        while parent[ra] != ra:
            ra = parent[ra]
        rb = b
        while parent[rb] != rb:
            rb = parent[rb]
        if ra == rb:
            continue
        # Path-compress both lookups, then union.
        x = a
        while parent[x] != ra:
            nxt = parent[x]
            parent[x] = ra
            x = nxt
        x = b
        while parent[x] != rb:
            nxt = parent[x]
            parent[x] = rb
            x = nxt
        parent[ra] = rb
        degree[a] += 1
        degree[b] += 1
        chosen_i[taken] = a
        chosen_j[taken] = b
        taken += 1
    return chosen_i, chosen_j, taken


@njit(cache=True)
def held_karp_fill(D):
    """Fill the Held-Karp table: dp[mask, j] = shortest path over the vertex
    set ``mask`` that ends at ``j`` (for j in mask)."""
    n = D.shape[0]
    full = 1 << n
    dp = np.full((full, n), np.inf)
    for j in range(n):
        dp[1 << j, j] = 0.0
    for mask in range(1, full):
        for j in range(n):
            bj = 1 << j
            if mask & bj == 0:
                continue
            prev = mask ^ bj
            if prev == 0:
                continue
            best = np.inf
            for i in range(n):
                if prev & (1 << i) == 0:
                    continue
                c = dp[prev, i] + D[i, j]
                if c < best:
                    best = c
            dp[mask, j] = best
    return dp
