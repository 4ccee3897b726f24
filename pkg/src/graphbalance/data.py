"""Dataset representation, group bookkeeping, and pairwise distances.

A dataset is an ``N x d`` real matrix of covariates together with a length-``N``
vector of integer group labels in ``{1..G}``.  Distances between units are
collected in a symmetric ``N x N`` matrix with zero diagonal, computed here by
the euclidean metric or its per-column standardized variant.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

__all__ = [
    "Dataset",
    "group_summary",
    "pairwise_distances",
    "validate_distance_matrix",
]

_METRICS = ("euclidean", "standardized_euclidean")


def group_summary(labels: np.ndarray) -> tuple[int, np.ndarray]:
    """Count groups and group sizes from a label vector.

    Parameters
    ----------
    labels : array_like of int
        Length-``N`` group labels.  Valid labels are ``1..G`` with every group
        in that range non-empty.

    Returns
    -------
    G : int
        Number of groups (the maximum label).
    group_sizes : ndarray of int, shape (G,)
        ``group_sizes[g-1]`` is the number of units with label ``g``.

    Raises
    ------
    ValidationError
        If ``labels`` is empty, any label is not a positive integer, or some
        group in ``1..G`` is empty.
    """
    labels = np.asarray(labels)
    if labels.ndim != 1 or labels.size == 0:
        raise ValidationError("labels must be a nonempty 1-d vector")
    if not np.issubdtype(labels.dtype, np.integer):
        if not np.all(labels == np.floor(labels)):
            raise ValidationError("labels must be integers")
        labels = labels.astype(np.int64)
    if labels.min() < 1:
        raise ValidationError(
            f"labels must be positive integers; found {labels.min()}"
        )
    n_groups = int(labels.max())
    sizes = np.bincount(labels, minlength=n_groups + 1)[1:]
    empty = np.nonzero(sizes == 0)[0]
    if empty.size:
        raise ValidationError(f"group {empty[0] + 1} is empty")
    return n_groups, sizes


@dataclass(frozen=True)
class Dataset:
    """Covariate matrix plus group labels.

    Attributes
    ----------
    data : ndarray, shape (N, d)
        Covariate values, one row per unit.
    labels : ndarray of int, shape (N,)
        Group labels in ``1..G``; every group non-empty.
    group_sizes : ndarray of int, shape (G,)
        Per-group unit counts; recomputed from ``labels`` and validated.
    """

    data: np.ndarray
    labels: np.ndarray
    group_sizes: np.ndarray = field(default=None)  # type: ignore[assignment]

    def __post_init__(self) -> None:
        data = np.asarray(self.data, dtype=np.float64)
        labels = np.asarray(self.labels)
        if data.ndim != 2:
            raise ValidationError("data must be a 2-d matrix")
        if labels.shape != (data.shape[0],):
            raise ValidationError(
                f"labels length {labels.shape} does not match N={data.shape[0]}"
            )
        if not np.all(np.isfinite(data)):
            raise ValidationError("data must be finite")
        _, sizes = group_summary(labels)
        if self.group_sizes is not None:
            stored = np.asarray(self.group_sizes)
            if stored.shape != sizes.shape or np.any(stored != sizes):
                raise ValidationError(
                    "stored group_sizes disagree with a recount of labels"
                )
        object.__setattr__(self, "data", data)
        object.__setattr__(self, "labels", labels.astype(np.int64))
        object.__setattr__(self, "group_sizes", sizes)

    @property
    def n_units(self) -> int:
        return self.data.shape[0]

    @property
    def n_features(self) -> int:
        return self.data.shape[1]

    @property
    def n_groups(self) -> int:
        return self.group_sizes.shape[0]


def pairwise_distances(data: np.ndarray, metric: str = "euclidean") -> np.ndarray:
    """Compute the symmetric pairwise distance matrix between rows.

    Parameters
    ----------
    data : ndarray, shape (N, d)
        Covariate matrix, ``N >= 2`` rows.
    metric : {"euclidean", "standardized_euclidean"}
        ``standardized_euclidean`` divides each column by its sample standard
        deviation (ddof=1) before computing euclidean distances.

    Returns
    -------
    D : ndarray, shape (N, N)
        Symmetric nonnegative distances with zero diagonal.

    Raises
    ------
    ValidationError
        If ``N < 2``, ``d < 1``, the metric is unknown, or a column has zero
        sample variance under ``standardized_euclidean``.
    """
    data = np.asarray(data, dtype=np.float64)
    if data.ndim != 2 or data.shape[0] < 2 or data.shape[1] < 1:
        raise ValidationError("data must be an N x d matrix with N >= 2, d >= 1")
    if metric not in _METRICS:
        raise ValidationError(f"metric must be one of {_METRICS}, got {metric!r}")
    if metric == "standardized_euclidean":
        sd = data.std(axis=0, ddof=1)
        zero = np.nonzero(sd <= 0.0)[0]
        if zero.size:
            raise ValidationError(
                f"column {zero[0]} has zero sample variance under "
                "standardized_euclidean"
            )
        data = data / sd
    n = data.shape[0]
    out = np.empty((n, n), dtype=np.float64)
    # Row-by-row broadcasting keeps D exactly symmetric (the same formula
    # evaluates D[i, j] and D[j, i]) and the diagonal exactly zero.
    for i in range(n):
        diff = data - data[i]
        out[i] = np.sqrt(np.einsum("ij,ij->i", diff, diff))
        out[i, i] = 0.0
    return out


def validate_distance_matrix(entries: np.ndarray) -> np.ndarray:
    """Check that a matrix is a valid distance matrix and return it as float64.

    Requires a square 2-d matrix, symmetric to within 0 tolerance, with
    nonnegative entries and zero diagonal.
    """
    entries = np.asarray(entries, dtype=np.float64)
    if entries.ndim != 2 or entries.shape[0] != entries.shape[1]:
        raise ValidationError("distance matrix must be square")
    if not np.array_equal(entries, entries.T):
        raise ValidationError("distance matrix must be symmetric")
    if np.any(entries < 0):
        raise ValidationError("distance matrix entries must be nonnegative")
    if np.any(np.diagonal(entries) != 0):
        raise ValidationError("distance matrix diagonal must be zero")
    return entries
