"""CSV ingestion, report serialization, and the command-line interface."""

import dataclasses
import json

import numpy as np
import pytest

from graphbalance import (
    CsvSchema,
    MethodSpec,
    ScenarioConfig,
    ValidationError,
    knn_graph,
    nbm_matching,
    pairwise_distances,
    permutation_null,
    power_study,
    read_csv_dataset,
    write_report,
)
from graphbalance.cli import main
from graphbalance.hypotests import TestConfig, balance_test
from graphbalance.io import report_json


@pytest.fixture
def grouped_csv(tmp_path):
    path = tmp_path / "grouped.csv"
    path.write_text(
        "grp,x,y\n"
        "A,0.0,1.0\n"
        "A,0.5,1.5\n"
        "B,2.0,0.5\n"
        "C,3.0,3.0\n"
        "C,3.5,2.5\n"
        "C,2.5,3.5\n"
    )
    return str(path)


@pytest.fixture
def test_csv(tmp_path, rng):
    """A G=3 dataset big enough for every method to run."""
    path = tmp_path / "data.csv"
    lines = ["g,a,b,c"]
    for g, size in ((1, 10), (2, 12), (3, 14)):
        block = rng.normal(size=(size, 3))
        for row in block:
            lines.append(f"g{g}," + ",".join(f"{v:.9f}" for v in row))
    path.write_text("\n".join(lines) + "\n")
    return str(path)


class TestCsvSchema:
    def test_group_column_cannot_be_covariate(self):
        with pytest.raises(ValidationError):
            CsvSchema(group_column="g", covariate_columns=("g", "x"))

    def test_negative_jitter_scale_rejected(self):
        with pytest.raises(ValidationError):
            CsvSchema(group_column="g", jitter_columns={"x": -1.0})

    def test_multicharacter_delimiter_rejected(self):
        with pytest.raises(ValidationError):
            CsvSchema(group_column="g", delimiter=",,")


class TestReadCsvDataset:
    def test_first_appearance_label_mapping(self, grouped_csv):
        loaded = read_csv_dataset(grouped_csv, CsvSchema(group_column="grp"))
        assert loaded.label_mapping == {"A": 1, "B": 2, "C": 3}
        assert loaded.dataset.labels.tolist() == [1, 1, 2, 3, 3, 3]
        assert loaded.dataset.group_sizes.tolist() == [2, 1, 3]
        assert loaded.dataset.data.shape == (6, 2)

    def test_covariate_subset_and_order(self, grouped_csv):
        loaded = read_csv_dataset(
            grouped_csv, CsvSchema(group_column="grp", covariate_columns=("y",))
        )
        assert loaded.dataset.data.shape == (6, 1)
        assert loaded.dataset.data[0, 0] == 1.0

    def test_missing_group_column_named_in_error(self, grouped_csv):
        with pytest.raises(ValidationError, match="'absent'"):
            read_csv_dataset(grouped_csv, CsvSchema(group_column="absent"))

    def test_unparseable_cell_locates_row_and_column(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("g,x\nA,1.0\nB,oops\n")
        with pytest.raises(ValidationError, match=r"row 2, column 'x'"):
            read_csv_dataset(str(path), CsvSchema(group_column="g"))

    def test_non_finite_cell_rejected(self, tmp_path):
        path = tmp_path / "inf.csv"
        path.write_text("g,x\nA,1.0\nB,inf\n")
        with pytest.raises(ValidationError, match="finite"):
            read_csv_dataset(str(path), CsvSchema(group_column="g"))

    def test_single_group_rejected(self, tmp_path):
        path = tmp_path / "one.csv"
        path.write_text("g,x\nA,1.0\nA,2.0\n")
        with pytest.raises(ValidationError, match="at least 2"):
            read_csv_dataset(str(path), CsvSchema(group_column="g"))

    def test_jitter_defaults_to_tiny_fraction_of_range(self, grouped_csv):
        plain = read_csv_dataset(grouped_csv, CsvSchema(group_column="grp"))
        jittered = read_csv_dataset(
            grouped_csv,
            CsvSchema(group_column="grp", jitter_columns={"x": None}),
            seed=5,
        )
        delta = jittered.dataset.data[:, 0] - plain.dataset.data[:, 0]
        x_range = 3.5 - 0.0
        assert np.any(delta != 0)
        assert np.all(np.abs(delta) <= 1e-6 * x_range / 2)
        # the other column is untouched
        np.testing.assert_array_equal(
            jittered.dataset.data[:, 1], plain.dataset.data[:, 1]
        )

    def test_jitter_scale_zero_is_identity(self, grouped_csv):
        plain = read_csv_dataset(grouped_csv, CsvSchema(group_column="grp"))
        zero = read_csv_dataset(
            grouped_csv, CsvSchema(group_column="grp", jitter_columns={"x": 0.0}), seed=5
        )
        np.testing.assert_array_equal(zero.dataset.data, plain.dataset.data)

    def test_jitter_deterministic_in_seed(self, grouped_csv):
        schema = CsvSchema(group_column="grp", jitter_columns={"x": 0.01})
        first = read_csv_dataset(grouped_csv, schema, seed=3)
        second = read_csv_dataset(grouped_csv, schema, seed=3)
        np.testing.assert_array_equal(first.dataset.data, second.dataset.data)

    def test_semicolon_delimiter(self, tmp_path):
        path = tmp_path / "semi.csv"
        path.write_text("g;x\nA;1.0\nB;2.0\n")
        loaded = read_csv_dataset(
            str(path), CsvSchema(group_column="g", delimiter=";")
        )
        assert loaded.dataset.data[:, 0].tolist() == [1.0, 2.0]


class TestWriteReport:
    def test_json_round_trip_is_byte_identical(self, rng, tmp_path):
        from graphbalance import Dataset

        dataset = Dataset(data=rng.normal(size=(20, 2)), labels=np.repeat([1, 2], 10))
        report = balance_test(dataset, "knn", "wald", TestConfig(seed=1))
        path = tmp_path / "report.json"
        write_report(report, "json", str(path))
        text = path.read_text()
        parsed = json.loads(text)
        for field in (
            "statistic_kind",
            "test_form",
            "statistic",
            "dof",
            "p_value",
            "mc_se",
            "moment_source",
            "graph_meta",
        ):
            assert field in parsed
        assert parsed["graph_meta"]["seed"] == 1
        assert json.dumps(parsed, sort_keys=True, indent=2) + "\n" == text

    def test_p_value_one_serializes_cleanly(self, rng):
        from graphbalance import Dataset

        dataset = Dataset(data=rng.normal(size=(16, 2)), labels=np.repeat([1, 2], 8))
        report = balance_test(dataset, "knn", "wald")
        saturated = dataclasses.replace(report, p_value=1.0)
        assert '"p_value": 1.0' in report_json(saturated)

    def test_power_table_csv(self, tmp_path):
        grid = [ScenarioConfig(name="n", kind="null", d=2, n_groups=2, sizes=(8, 8), replicates=2, seed=0)]
        table = power_study(grid, [MethodSpec(method="runs", form="min")], n_mc=1_000, permutation_draws=100)
        path = tmp_path / "table.csv"
        write_report(table, "csv", str(path))
        lines = path.read_text().splitlines()
        assert lines[0] == "scenario,kind,delta,d,G,method,form,replicates,rejection_rate,mc_se,seed"
        assert len(lines) == 2

    def test_unknown_format_rejected(self, rng):
        from graphbalance import Dataset

        dataset = Dataset(data=rng.normal(size=(16, 2)), labels=np.repeat([1, 2], 8))
        report = balance_test(dataset, "knn", "wald")
        with pytest.raises(Exception, match="format"):
            write_report(report, "yaml", "/tmp/never.yaml")


class TestCliTest:
    def test_emits_valid_json_with_all_fields(self, test_csv, tmp_path, capsys):
        out = tmp_path / "report.json"
        code = main(
            [
                "test",
                test_csv,
                "--group-column",
                "g",
                "--method",
                "knn",
                "--seed",
                "3",
                "--output",
                str(out),
            ]
        )
        assert code == 0
        payload = json.loads(out.read_text())
        assert payload["seed"] == 3
        assert payload["seed_source"] == "flag"
        assert payload["label_mapping"] == {"g1": 1, "g2": 2, "g3": 3}
        assert payload["statistic_kind"] == "knn_counts"
        assert 0.0 <= payload["p_value"] <= 1.0

    def test_runs_method_defaults_to_min_form(self, test_csv, capsys):
        assert main(["test", test_csv, "--group-column", "g", "--method", "runs"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["test_form"] == "min"

    def test_same_seed_is_byte_identical(self, test_csv, tmp_path):
        first, second = tmp_path / "a.json", tmp_path / "b.json"
        argv = ["test", test_csv, "--group-column", "g", "--method", "crossmatch", "--seed", "9"]
        assert main(argv + ["--output", str(first)]) == 0
        assert main(argv + ["--output", str(second)]) == 0
        assert first.read_bytes() == second.read_bytes()

    def test_env_seed_is_used_and_echoed(self, test_csv, capsys, monkeypatch):
        monkeypatch.setenv("GRAPHBALANCE_SEED", "42")
        assert main(["test", test_csv, "--group-column", "g", "--method", "knn"]) == 0
        captured = capsys.readouterr()
        payload = json.loads(captured.out)
        assert payload["seed"] == 42
        assert payload["seed_source"] == "env"
        assert "GRAPHBALANCE_SEED" in captured.err

    def test_flag_overrides_env_seed(self, test_csv, capsys, monkeypatch):
        monkeypatch.setenv("GRAPHBALANCE_SEED", "42")
        assert main(["test", test_csv, "--group-column", "g", "--method", "knn", "--seed", "7"]) == 0
        payload = json.loads(capsys.readouterr().out)
        assert payload["seed"] == 7
        assert payload["seed_source"] == "flag"

    def test_errors_exit_nonzero(self, test_csv, capsys):
        assert main(["test", test_csv, "--group-column", "nope", "--method", "knn"]) == 1
        assert "nope" in capsys.readouterr().err
        assert main(["test", "/does/not/exist.csv", "--group-column", "g", "--method", "knn"]) == 1
        # ranks only supports the Wald form
        assert main(["test", test_csv, "--group-column", "g", "--method", "ranks", "--form", "max"]) == 1


class TestCliGraph:
    @pytest.mark.parametrize(
        "structure,expected_edges",
        [("knn", 36 * 3), ("path", 35), ("matching", 18)],
    )
    def test_edge_list_shape(self, test_csv, capsys, structure, expected_edges):
        code = main(
            [
                "graph",
                test_csv,
                "--group-column",
                "g",
                "--structure",
                structure,
                "--k",
                "3",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "src,dst,weight"
        assert len(lines) - 1 == expected_edges

    def test_weights_match_distances(self, test_csv, capsys):
        assert main(["graph", test_csv, "--group-column", "g", "--structure", "matching"]) == 0
        lines = capsys.readouterr().out.splitlines()[1:]
        loaded = read_csv_dataset(test_csv, CsvSchema(group_column="g"))
        distances = pairwise_distances(loaded.dataset.data)
        for line in lines:
            i, j, weight = line.split(",")
            assert float(weight) == pytest.approx(distances[int(i), int(j)], rel=1e-12)


class TestCliOracle:
    @pytest.fixture
    def tiny_csv(self, tmp_path, rng):
        path = tmp_path / "tiny.csv"
        lines = ["g,x,y"]
        for g, size in ((1, 3), (2, 4)):
            for _ in range(size):
                lines.append(f"{g},{rng.normal():.6f},{rng.normal():.6f}")
        path.write_text("\n".join(lines) + "\n")
        return str(path)

    def test_exhaustive_moments_match_library_call(self, tiny_csv, capsys):
        assert main(
            ["oracle", tiny_csv, "--group-column", "g", "--statistic", "runs"]
        ) == 0
        payload = json.loads(capsys.readouterr().out)
        loaded = read_csv_dataset(tiny_csv, CsvSchema(group_column="g"))
        from graphbalance import greedy_path

        path = greedy_path(pairwise_distances(loaded.dataset.data))
        null = permutation_null("runs", path, loaded.dataset.group_sizes, mode="exhaustive")
        np.testing.assert_allclose(payload["mean"], null.empirical_mean, atol=1e-12)
        np.testing.assert_allclose(payload["covariance"], null.empirical_cov, atol=1e-12)
        assert payload["n_labelings"] == 35
        assert payload["mode"] == "exhaustive"

    def test_knn_oracle_reports_closed_form_alongside(self, tiny_csv, capsys):
        assert main(
            ["oracle", tiny_csv, "--group-column", "g", "--statistic", "knn", "--k", "2"]
        ) == 0
        payload = json.loads(capsys.readouterr().out)
        np.testing.assert_allclose(payload["analytic_mean"], payload["mean"], atol=1e-9)
        np.testing.assert_allclose(
            payload["analytic_covariance"], payload["covariance"], atol=1e-9
        )

    def test_capacity_exceeded_exits_nonzero(self, test_csv, capsys):
        assert main(
            ["oracle", test_csv, "--group-column", "g", "--statistic", "runs"]
        ) == 1
        assert "labelings" in capsys.readouterr().err


class TestCliSimulate:
    def test_emits_power_csv(self, capsys):
        code = main(
            [
                "simulate",
                "--kind",
                "location",
                "--delta",
                "1.0",
                "--d",
                "2",
                "--groups",
                "2",
                "--sizes",
                "8,10",
                "--replicates",
                "3",
                "--methods",
                "knn:wald,runs:min",
                "--mc",
                "2000",
                "--perm-draws",
                "200",
                "--seed",
                "1",
            ]
        )
        assert code == 0
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "scenario,kind,delta,d,G,method,form,replicates,rejection_rate,mc_se,seed"
        assert len(lines) == 3
        assert lines[1].startswith("location,location,1.0,2,2,knn,wald,3,")
