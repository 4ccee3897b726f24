"""Minimum-weight perfect matching and the odd-size phantom reduction."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from graphbalance import Matching, ValidationError, nbm_matching, pairwise_distances
from graphbalance._mwmatch import min_weight_perfect_matching

from conftest import brute_force_min_matching, perfect_matchings, random_points


def matching_weight(distances: np.ndarray, pairs: np.ndarray) -> float:
    return float(sum(distances[i, j] for i, j in pairs))


class TestMinWeightPerfectMatching:
    @given(seed=st.integers(0, 10**6), half=st.integers(1, 5))
    @settings(max_examples=40, deadline=None)
    def test_matches_brute_force_on_random_instances(self, seed, half):
        gen = np.random.default_rng(seed)
        distances = pairwise_distances(gen.normal(size=(2 * half, 3)))
        mate, total = min_weight_perfect_matching(distances)
        assert total == pytest.approx(brute_force_min_matching(distances), rel=1e-9)
        # mate is a perfect involution
        assert np.all(mate >= 0)
        np.testing.assert_array_equal(mate[mate], np.arange(2 * half))

    @given(seed=st.integers(0, 10**6))
    @settings(max_examples=20, deadline=None)
    def test_matches_brute_force_with_tied_integer_weights(self, seed):
        gen = np.random.default_rng(seed)
        points = gen.integers(0, 3, size=(8, 2)).astype(np.float64)
        distances = pairwise_distances(points)
        _, total = min_weight_perfect_matching(distances)
        assert total == pytest.approx(brute_force_min_matching(distances), abs=1e-9)

    def test_matches_networkx_on_larger_instances(self, rng):
        networkx = pytest.importorskip("networkx")
        for trial in range(5):
            points = random_points(rng, 30, 4)
            distances = pairwise_distances(points)
            _, total = min_weight_perfect_matching(distances)
            graph = networkx.Graph()
            n = distances.shape[0]
            for i in range(n):
                for j in range(i + 1, n):
                    graph.add_edge(i, j, weight=-distances[i, j])
            reference = networkx.max_weight_matching(graph, maxcardinality=True)
            reference_total = sum(distances[i, j] for i, j in reference)
            assert total == pytest.approx(reference_total, rel=1e-9)

    def test_rejects_odd_size(self):
        with pytest.raises(ValidationError):
            min_weight_perfect_matching(np.zeros((3, 3)))

    def test_weight_scale_invariance_is_exact(self, rng):
        distances = pairwise_distances(random_points(rng, 12, 3))
        mate, total = min_weight_perfect_matching(distances)
        mate_scaled, total_scaled = min_weight_perfect_matching(distances * 4.0)
        np.testing.assert_array_equal(mate, mate_scaled)
        assert total_scaled == pytest.approx(4.0 * total, rel=1e-12)

    def test_two_units(self):
        distances = np.array([[0.0, 3.5], [3.5, 0.0]])
        mate, total = min_weight_perfect_matching(distances)
        assert mate.tolist() == [1, 0]
        assert total == pytest.approx(3.5)


class TestNbmMatching:
    def test_even_size_pairs_everyone(self, rng):
        distances = pairwise_distances(random_points(rng, 10, 3))
        matching = nbm_matching(distances)
        assert matching.dropped_unit is None
        assert matching.pairs.shape == (5, 2)
        assert sorted(matching.pairs.ravel().tolist()) == list(range(10))
        assert matching.total_weight == pytest.approx(
            matching_weight(distances, matching.pairs)
        )

    @given(seed=st.integers(0, 10**6), n=st.sampled_from([3, 5, 7]))
    @settings(max_examples=30, deadline=None)
    def test_odd_size_matches_enumeration_over_dropped_unit(self, seed, n):
        gen = np.random.default_rng(seed)
        distances = pairwise_distances(gen.normal(size=(n, 2)))
        matching = nbm_matching(distances)
        # brute force: for each candidate to leave out, the best pairing of the rest
        best = np.inf
        for dropped in range(n):
            kept = [u for u in range(n) if u != dropped]
            for pairs in perfect_matchings(kept):
                best = min(best, sum(distances[i, j] for i, j in pairs))
        assert matching.total_weight == pytest.approx(best, abs=1e-9)
        retained = sorted(matching.pairs.ravel().tolist())
        assert matching.dropped_unit not in retained
        assert len(retained) == n - 1

    def test_even_size_matches_brute_force(self, rng):
        for _ in range(10):
            distances = pairwise_distances(random_points(rng, 8, 2))
            matching = nbm_matching(distances)
            assert matching.total_weight == pytest.approx(
                brute_force_min_matching(distances), rel=1e-9
            )

    def test_deterministic(self, rng):
        distances = pairwise_distances(random_points(rng, 9, 3))
        first = nbm_matching(distances)
        second = nbm_matching(distances)
        np.testing.assert_array_equal(first.pairs, second.pairs)
        assert first.dropped_unit == second.dropped_unit

    def test_matching_container_rejects_overlapping_pairs(self):
        with pytest.raises(ValidationError):
            Matching(pairs=np.array([[0, 1], [1, 2]]), dropped_unit=None, total_weight=0.0)

    def test_single_pair_instance(self):
        distances = np.array([[0.0, 2.0], [2.0, 0.0]])
        matching = nbm_matching(distances)
        assert matching.pairs.tolist() == [[0, 1]]
        assert matching.total_weight == pytest.approx(2.0)
