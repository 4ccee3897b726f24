"""Scenario generators, diagnostics, and the power-study driver."""

import numpy as np
import pytest
from scipy import stats

from graphbalance import (
    ConfigurationError,
    Dataset,
    MethodSpec,
    ScenarioConfig,
    gen_gaussian_scenario,
    gen_motivating,
    power_study,
    scenario_dataset,
    univariate_diagnostics,
)
from graphbalance.simulate import POWER_CSV_HEADER, motivating_probabilities


class TestScenarioConfig:
    def test_default_size_rule(self):
        config = ScenarioConfig(name="s", kind="scale", n_groups=4)
        assert config.group_sizes() == (50, 100, 150, 200)

    def test_explicit_sizes_override_rule(self):
        config = ScenarioConfig(name="s", kind="null", n_groups=2, sizes=(7, 9))
        assert config.group_sizes() == (7, 9)

    def test_correlation_delta_must_stay_below_one(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(name="c", kind="correlation", delta=1.0)
        ScenarioConfig(name="c", kind="correlation", delta=0.99)

    def test_unknown_kind_rejected(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(name="x", kind="drift")

    def test_tiny_groups_rejected(self):
        with pytest.raises(ConfigurationError):
            ScenarioConfig(name="x", kind="null", sizes=(1, 5))


class TestGaussianScenarios:
    def test_deterministic_in_seed_and_replicate(self):
        config = ScenarioConfig(name="s", kind="scale", delta=0.3, d=5, n_groups=2, sizes=(6, 8), seed=3)
        first = gen_gaussian_scenario(config, 4)
        second = gen_gaussian_scenario(config, 4)
        np.testing.assert_array_equal(first.data, second.data)
        other = gen_gaussian_scenario(config, 5)
        assert not np.array_equal(first.data, other.data)

    def test_delta_zero_collapses_all_kinds(self):
        datasets = [
            gen_gaussian_scenario(
                ScenarioConfig(name=k, kind=k, delta=0.0, d=3, n_groups=2, sizes=(5, 7), seed=11),
                0,
            )
            for k in ("location", "scale", "correlation", "null")
        ]
        for dataset in datasets[1:]:
            np.testing.assert_array_equal(dataset.data, datasets[0].data)

    def test_location_shifts_group_means(self):
        config = ScenarioConfig(
            name="l", kind="location", delta=0.5, d=2, n_groups=3, sizes=(4000, 4000, 4000), seed=0
        )
        dataset = gen_gaussian_scenario(config, 0)
        for g, expected in ((1, 0.0), (2, 0.5), (3, 1.0)):
            block = dataset.data[dataset.labels == g]
            assert block.mean() == pytest.approx(expected, abs=0.05)

    def test_scale_inflates_group_variance(self):
        config = ScenarioConfig(
            name="s", kind="scale", delta=0.4, d=2, n_groups=3, sizes=(4000, 4000, 4000), seed=1
        )
        dataset = gen_gaussian_scenario(config, 0)
        for g, expected in ((1, 1.0), (2, 1.4), (3, 1.8)):
            block = dataset.data[dataset.labels == g]
            assert block.var(ddof=1) == pytest.approx(expected, rel=0.08)

    def test_correlation_hits_target_equicorrelation(self):
        config = ScenarioConfig(
            name="c", kind="correlation", delta=0.6, d=5, n_groups=3, sizes=(4000, 4000, 4000), seed=2
        )
        dataset = gen_gaussian_scenario(config, 0)
        # rho_g = (g-1) * delta / (G-1): groups get 0, 0.3, 0.6
        for g, expected in ((1, 0.0), (2, 0.3), (3, 0.6)):
            block = dataset.data[dataset.labels == g]
            corr = np.corrcoef(block.T)
            off_diagonal = corr[np.triu_indices(5, 1)]
            assert off_diagonal.mean() == pytest.approx(expected, abs=0.04)

    def test_motivating_kind_dispatches_to_own_generator(self):
        config = ScenarioConfig(name="m", kind="motivating", seed=5)
        dataset = scenario_dataset(config, 0)
        assert dataset.n_units == 150
        assert dataset.n_features == 2
        assert dataset.n_groups == 3


class TestMotivating:
    def test_probabilities_are_a_simplex(self, rng):
        points = rng.normal(size=(40, 2))
        probabilities = motivating_probabilities(points)
        assert probabilities.shape == (40, 3)
        assert np.all(probabilities > 0)
        np.testing.assert_allclose(probabilities.sum(axis=1), 1.0, atol=1e-12)

    def test_origin_favors_group_two_slightly(self):
        # at x = 0 the logits are (0, 0, 0): uniform membership
        probabilities = motivating_probabilities(np.zeros((1, 2)))
        np.testing.assert_allclose(probabilities, 1 / 3, atol=1e-12)

    def test_draw_is_deterministic_and_complete(self):
        first = gen_motivating(150, replicate_index=3, seed=9)
        second = gen_motivating(150, replicate_index=3, seed=9)
        np.testing.assert_array_equal(first.dataset.data, second.dataset.data)
        np.testing.assert_array_equal(first.dataset.labels, second.dataset.labels)
        assert first.regenerations == second.regenerations
        assert first.dataset.n_groups == 3

    def test_group_means_shift_far_less_than_joint_structure(self):
        # the design's point: group means barely move (well under half a
        # standard deviation) even though the joint distributions differ
        dataset = gen_motivating(30_000, replicate_index=0, seed=1).dataset
        for g in (1, 2, 3):
            block = dataset.data[dataset.labels == g]
            assert np.all(np.abs(block.mean(axis=0)) < 0.25)

    def test_minimum_size_enforced(self):
        with pytest.raises(Exception):
            gen_motivating(2)


class TestUnivariateDiagnostics:
    def test_matches_scipy_anova(self, rng):
        data = rng.normal(size=(60, 3))
        data[40:, 0] += 1.0
        dataset = Dataset(data=data, labels=np.repeat([1, 2, 3], 20))
        rows = univariate_diagnostics(
            dataset,
            {"first": lambda m: m[:, 0], "product": lambda m: m[:, 1] * m[:, 2]},
        )
        by_name = {row.name: row for row in rows}
        for name, column in (
            ("first", data[:, 0]),
            ("product", data[:, 1] * data[:, 2]),
        ):
            reference = stats.f_oneway(column[:20], column[20:40], column[40:])
            assert by_name[name].f_statistic == pytest.approx(reference.statistic, abs=1e-10)
            assert by_name[name].f_p_value == pytest.approx(reference.pvalue, abs=1e-10)

    def test_std_diff_definition(self, rng):
        data = rng.normal(size=(30, 1))
        dataset = Dataset(data=data, labels=np.repeat([1, 2, 3], 10))
        row = univariate_diagnostics(dataset, {"x": lambda m: m[:, 0]})[0]
        column = data[:, 0]
        manual = np.mean(
            [abs(column[g * 10 : (g + 1) * 10].mean() - column.mean()) for g in range(3)]
        ) / column.std(ddof=1)
        assert row.std_diff == pytest.approx(manual, abs=1e-12)

    def test_zero_variance_column_rejected(self):
        dataset = Dataset(data=np.ones((8, 1)), labels=np.repeat([1, 2], 4))
        with pytest.raises(Exception, match="variance"):
            univariate_diagnostics(dataset, {"flat": lambda m: m[:, 0]})


@pytest.fixture(scope="module")
def small_table():
    grid = [
        ScenarioConfig(name="null", kind="null", d=3, n_groups=2, sizes=(10, 12), replicates=6, seed=2),
        ScenarioConfig(name="shift", kind="location", delta=1.5, d=3, n_groups=2, sizes=(10, 12), replicates=6, seed=2),
    ]
    methods = [
        MethodSpec(method="knn", form="wald"),
        MethodSpec(method="runs", form="min"),
    ]
    return power_study(grid, methods, n_mc=5_000, permutation_draws=500)


class TestPowerStudy:
    def test_rates_are_exact_fractions_of_replicates(self, small_table):
        for row in small_table.rows:
            scaled = row.rejection_rate * row.replicates
            assert scaled == pytest.approx(round(scaled), abs=1e-12)

    def test_mc_se_formula(self, small_table):
        for row in small_table.rows:
            rate = row.rejection_rate
            assert row.mc_se == pytest.approx(
                np.sqrt(rate * (1 - rate) / row.replicates), abs=1e-15
            )

    def test_csv_header_is_fixed(self, small_table):
        text = small_table.to_csv()
        assert text.splitlines()[0] == POWER_CSV_HEADER
        assert (
            POWER_CSV_HEADER
            == "scenario,kind,delta,d,G,method,form,replicates,rejection_rate,mc_se,seed"
        )

    def test_same_seed_gives_identical_csv_bytes(self, small_table):
        grid = [
            ScenarioConfig(name="null", kind="null", d=3, n_groups=2, sizes=(10, 12), replicates=6, seed=2),
            ScenarioConfig(name="shift", kind="location", delta=1.5, d=3, n_groups=2, sizes=(10, 12), replicates=6, seed=2),
        ]
        methods = [
            MethodSpec(method="knn", form="wald"),
            MethodSpec(method="runs", form="min"),
        ]
        again = power_study(grid, methods, n_mc=5_000, permutation_draws=500)
        assert again.to_csv() == small_table.to_csv()

    def test_separation_beats_null(self, small_table):
        null_rate = small_table.find("null", "knn", "wald").rejection_rate
        shift_rate = small_table.find("shift", "knn", "wald").rejection_rate
        assert shift_rate > null_rate

    def test_no_failures_on_clean_scenarios(self, small_table):
        assert all(row.failures == 0 for row in small_table.rows)

    def test_find_unknown_row_raises(self, small_table):
        with pytest.raises(KeyError):
            small_table.find("null", "bootstrap")

    def test_overrides_and_method_names(self):
        grid = [ScenarioConfig(name="n", kind="null", d=2, n_groups=2, sizes=(8, 8), replicates=10, seed=0)]
        methods = [MethodSpec(method="knn", form="wald", k=3)]
        table = power_study(grid, methods, replicates=3, seed=77, n_mc=2_000, permutation_draws=200)
        row = table.rows[0]
        assert row.replicates == 3
        assert row.seed == 77
        assert row.method == "knn:k=3"

    def test_alpha_validated(self):
        grid = [ScenarioConfig(name="n", kind="null", d=2, n_groups=2, sizes=(8, 8), replicates=2, seed=0)]
        with pytest.raises(ConfigurationError):
            power_study(grid, [MethodSpec(method="knn")], alpha=0.0)
