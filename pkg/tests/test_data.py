"""Dataset container, group bookkeeping, and distance matrices."""

import numpy as np
import pytest
from scipy.spatial.distance import cdist

from graphbalance import (
    Dataset,
    ValidationError,
    group_summary,
    pairwise_distances,
    validate_distance_matrix,
)

from conftest import random_points


class TestGroupSummary:
    def test_counts_contiguous_labels(self):
        n_groups, sizes = group_summary(np.array([1, 2, 1, 3, 3, 3]))
        assert n_groups == 3
        assert list(sizes) == [2, 1, 3]

    def test_rejects_empty_group(self):
        with pytest.raises(ValidationError, match="group 2"):
            group_summary(np.array([1, 1, 3, 3]))

    def test_rejects_nonpositive_labels(self):
        with pytest.raises(ValidationError):
            group_summary(np.array([0, 1, 2]))

    def test_rejects_non_integer_labels(self):
        with pytest.raises(ValidationError):
            group_summary(np.array([1.0, 1.5]))


class TestDataset:
    def test_recounts_and_stores_sizes(self, rng):
        data = random_points(rng, 6, 2)
        dataset = Dataset(data=data, labels=np.array([2, 1, 1, 2, 2, 1]))
        assert dataset.n_units == 6
        assert dataset.n_features == 2
        assert dataset.n_groups == 2
        assert list(dataset.group_sizes) == [3, 3]

    def test_rejects_stored_size_mismatch(self, rng):
        data = random_points(rng, 4, 2)
        with pytest.raises(ValidationError, match="recount"):
            Dataset(data=data, labels=np.array([1, 1, 2, 2]), group_sizes=np.array([3, 1]))

    def test_rejects_label_length_mismatch(self, rng):
        with pytest.raises(ValidationError):
            Dataset(data=random_points(rng, 4, 2), labels=np.array([1, 2, 1]))

    def test_rejects_non_finite_data(self):
        data = np.array([[0.0, 1.0], [np.nan, 2.0]])
        with pytest.raises(ValidationError, match="finite"):
            Dataset(data=data, labels=np.array([1, 2]))

    def test_rejects_one_dimensional_data(self):
        with pytest.raises(ValidationError):
            Dataset(data=np.arange(4.0), labels=np.array([1, 1, 2, 2]))


class TestPairwiseDistances:
    def test_matches_scipy_euclidean(self, rng):
        points = random_points(rng, 25, 4)
        ours = pairwise_distances(points)
        reference = cdist(points, points)
        np.testing.assert_allclose(ours, reference, atol=1e-12)
        assert np.all(np.diag(ours) == 0.0)

    def test_standardized_metric_rescales_columns(self, rng):
        points = random_points(rng, 30, 3) * np.array([1.0, 10.0, 100.0])
        ours = pairwise_distances(points, metric="standardized_euclidean")
        scaled = points / points.std(axis=0, ddof=1)
        reference = cdist(scaled, scaled)
        np.testing.assert_allclose(ours, reference, atol=1e-12)

    def test_standardized_metric_is_scale_invariant(self, rng):
        points = random_points(rng, 15, 3)
        base = pairwise_distances(points, metric="standardized_euclidean")
        rescaled = pairwise_distances(points * 37.5, metric="standardized_euclidean")
        np.testing.assert_allclose(base, rescaled, rtol=1e-12)

    def test_standardized_metric_rejects_constant_column(self):
        points = np.column_stack([np.arange(5.0), np.ones(5)])
        with pytest.raises(ValidationError):
            pairwise_distances(points, metric="standardized_euclidean")

    def test_unknown_metric_rejected(self, rng):
        with pytest.raises(ValidationError):
            pairwise_distances(random_points(rng, 5, 2), metric="manhattan")

    def test_output_is_exactly_symmetric(self, rng):
        ours = pairwise_distances(random_points(rng, 40, 6))
        assert np.array_equal(ours, ours.T)


class TestValidateDistanceMatrix:
    def test_accepts_valid_matrix(self, rng):
        matrix = pairwise_distances(random_points(rng, 8, 2))
        returned = validate_distance_matrix(matrix)
        assert returned.dtype == np.float64

    def test_rejects_asymmetry(self):
        matrix = np.array([[0.0, 1.0], [2.0, 0.0]])
        with pytest.raises(ValidationError, match="symmetric"):
            validate_distance_matrix(matrix)

    def test_rejects_nonzero_diagonal(self):
        matrix = np.array([[1.0, 2.0], [2.0, 0.0]])
        with pytest.raises(ValidationError):
            validate_distance_matrix(matrix)

    def test_rejects_negative_entries(self):
        matrix = np.array([[0.0, -1.0], [-1.0, 0.0]])
        with pytest.raises(ValidationError):
            validate_distance_matrix(matrix)
