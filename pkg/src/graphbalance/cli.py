"""Command-line interface.

Four subcommands:

``test``
    Read a labeled CSV and run one balance test, emitting a JSON report.
``simulate``
    Run a one-cell power study from scenario flags, emitting the power CSV.
``graph``
    Build the kNN graph, path, or matching for a CSV and emit it as an
    edge-list CSV (``src,dst,weight``) for inspection.
``oracle``
    Exhaustively enumerate the permutation distribution of a statistic on a
    tiny input and emit its exact moments as JSON (with the closed-form
    moments alongside where they exist).

All randomness flows from ``--seed`` (default: the ``GRAPHBALANCE_SEED``
environment variable if set, else 0); the effective seed and its source are
echoed into every JSON payload, and reruns with identical inputs are
byte-identical.  Exit status is 0 exactly when no error occurred.
"""

from __future__ import annotations

import argparse
import json
import os
import sys

from .data import pairwise_distances
from .errors import ConfigurationError, GraphBalanceError
from .hypotests import (
    FORMS,
    METHODS,
    PATH_VARIANTS,
    TestConfig,
    _build_path,
    _effective_data,
    balance_test,
    default_k,
)
from .io import CsvSchema, read_csv_dataset, report_json
from .neighbors import graph_functionals, knn_graph, nbm_matching
from .simulate import MethodSpec, ScenarioConfig, power_study
from .statistics import knn_moments, labeling_count, permutation_null, run_moments

__all__ = ["main"]

_SEED_ENV = "GRAPHBALANCE_SEED"
_METRICS = ("euclidean", "standardized_euclidean")
_ORACLE_KINDS = {
    "knn": "knn_counts",
    "runs": "runs",
    "ranks": "ranks_kw",
    "crossmatch": "crossmatch_pairs",
}
_DEFAULT_SIM_METHODS = "knn:wald,crossmatch:wald,runs:min,ranks:wald"


def _add_csv_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("csv", help="input dataset CSV")
    parser.add_argument("--group-column", required=True, help="column holding group labels")
    parser.add_argument(
        "--covariates",
        default=None,
        help="comma-separated covariate columns (default: every non-group column)",
    )
    parser.add_argument(
        "--jitter",
        action="append",
        default=[],
        metavar="COL[=SCALE]",
        help="add uniform(-scale/2, scale/2) noise to a column "
        "(default scale: 1e-6 of the column range); repeatable",
    )
    parser.add_argument("--delimiter", default=",", help="CSV delimiter (default ',')")


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument(
        "--seed",
        type=int,
        default=None,
        help=f"random seed (default: ${_SEED_ENV} if set, else 0)",
    )
    parser.add_argument("--output", default=None, help="output path (default: stdout)")


def _resolve_seed(args: argparse.Namespace) -> tuple[int, str]:
    if args.seed is not None:
        return int(args.seed), "flag"
    env_value = os.environ.get(_SEED_ENV)
    if env_value is not None:
        try:
            seed = int(env_value)
        except ValueError:
            raise ConfigurationError(
                f"{_SEED_ENV} must be an integer, got {env_value!r}"
            ) from None
        print(f"seed {seed} taken from {_SEED_ENV}", file=sys.stderr)
        return seed, "env"
    return 0, "default"


def _parse_jitter(tokens: list[str]) -> dict[str, float | None]:
    jitter: dict[str, float | None] = {}
    for token in tokens:
        name, sep, scale_text = token.partition("=")
        jitter[name] = float(scale_text) if sep else None
    return jitter


def _schema_from_args(args: argparse.Namespace) -> CsvSchema:
    covariates = (
        tuple(name.strip() for name in args.covariates.split(","))
        if args.covariates
        else None
    )
    return CsvSchema(
        group_column=args.group_column,
        covariate_columns=covariates,
        jitter_columns=_parse_jitter(args.jitter),
        delimiter=args.delimiter,
    )


def _emit(text: str, output: str | None) -> None:
    if output is None:
        sys.stdout.write(text)
    else:
        with open(output, "w", encoding="utf-8", newline="") as handle:
            handle.write(text)


def _cmd_test(args: argparse.Namespace) -> None:
    seed, seed_source = _resolve_seed(args)
    loaded = read_csv_dataset(args.csv, _schema_from_args(args), seed=seed)
    form = args.form
    if form is None:
        form = "min" if args.method == "runs" else "wald"
    config = TestConfig(
        k=args.k,
        path_variant=args.path_variant,
        metric=args.metric,
        n_mc=args.mc,
        permutation_draws=args.perm_draws,
        seed=seed,
    )
    report = balance_test(loaded.dataset, args.method, form, config)
    text = report_json(
        report,
        extra={
            "label_mapping": loaded.label_mapping,
            "seed": seed,
            "seed_source": seed_source,
        },
    )
    _emit(text, args.output)


def _parse_method_token(token: str) -> MethodSpec:
    parts = token.split(":")
    method = parts[0]
    form = "wald"
    k: int | None = None
    variant = "greedy_edge"
    for part in parts[1:]:
        if part in FORMS:
            form = part
        elif part.startswith("k="):
            k = int(part[2:])
        elif part.startswith("variant="):
            variant = part[len("variant="):]
        else:
            raise ConfigurationError(f"cannot parse method token part {part!r}")
    return MethodSpec(method=method, form=form, k=k, path_variant=variant)


def _cmd_simulate(args: argparse.Namespace) -> None:
    seed, _ = _resolve_seed(args)
    sizes = (
        tuple(int(text) for text in args.sizes.split(",")) if args.sizes else None
    )
    config = ScenarioConfig(
        name=args.name or args.kind,
        kind=args.kind,
        delta=args.delta,
        d=args.d,
        n_groups=args.groups,
        sizes=sizes,
        replicates=args.replicates,
        seed=seed,
        n_units=args.n_units,
    )
    methods = [_parse_method_token(token) for token in args.methods.split(",")]
    table = power_study(
        [config],
        methods,
        alpha=args.alpha,
        n_mc=args.mc,
        permutation_draws=args.perm_draws,
    )
    _emit(table.to_csv(), args.output)


def _graph_edges(args: argparse.Namespace, seed: int):
    loaded = read_csv_dataset(args.csv, _schema_from_args(args), seed=seed)
    dataset = loaded.dataset
    effective = _effective_data(dataset, args.metric)
    distances = pairwise_distances(dataset.data, metric=args.metric)
    if args.structure == "knn":
        k = args.k if args.k is not None else default_k(dataset.n_units)
        graph = knn_graph(effective, k)
        for i in range(dataset.n_units):
            for j in graph.neighbors[i]:
                yield int(i), int(j), float(distances[i, j])
    elif args.structure == "path":
        path = _build_path(effective, args.path_variant)
        order = path.order
        for t in range(order.size - 1):
            i, j = int(order[t]), int(order[t + 1])
            yield i, j, float(distances[i, j])
    else:  # matching
        matching = nbm_matching(distances)
        for i, j in matching.pairs:
            yield int(i), int(j), float(distances[i, j])


def _cmd_graph(args: argparse.Namespace) -> None:
    seed, _ = _resolve_seed(args)
    lines = ["src,dst,weight"]
    for i, j, weight in _graph_edges(args, seed):
        lines.append(f"{i},{j},{weight!r}")
    _emit("\n".join(lines) + "\n", args.output)


def _cmd_oracle(args: argparse.Namespace) -> None:
    seed, seed_source = _resolve_seed(args)
    loaded = read_csv_dataset(args.csv, _schema_from_args(args), seed=seed)
    dataset = loaded.dataset
    effective = _effective_data(dataset, args.metric)
    kind = _ORACLE_KINDS[args.statistic]
    payload: dict = {
        "statistic": args.statistic,
        "statistic_kind": kind,
        "mode": "exhaustive",
        "group_sizes": [int(s) for s in dataset.group_sizes],
        "n_labelings": labeling_count(dataset.group_sizes),
        "seed": seed,
        "seed_source": seed_source,
        "label_mapping": loaded.label_mapping,
    }
    if args.statistic == "knn":
        k = args.k if args.k is not None else default_k(dataset.n_units)
        structure = knn_graph(effective, k)
        moments = knn_moments(
            dataset.n_units, dataset.group_sizes, k, graph_functionals(structure)
        )
        payload["k"] = k
        payload["analytic_mean"] = moments.expectation.tolist()
        payload["analytic_covariance"] = moments.covariance.tolist()
    elif args.statistic in ("runs", "ranks"):
        structure = _build_path(effective, args.path_variant)
        payload["path_variant"] = args.path_variant
        if args.statistic == "runs":
            moments = run_moments(dataset.n_units, dataset.group_sizes)
            payload["analytic_mean"] = moments.mean.tolist()
            payload["analytic_covariance"] = moments.covariance.tolist()
    else:
        structure = nbm_matching(pairwise_distances(dataset.data, metric=args.metric))
        payload["dropped_unit"] = structure.dropped_unit
    null = permutation_null(kind, structure, dataset.group_sizes, mode="exhaustive")
    payload["mean"] = null.empirical_mean.tolist()
    payload["covariance"] = null.empirical_cov.tolist()
    _emit(json.dumps(payload, sort_keys=True, indent=2) + "\n", args.output)


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="graphbalance",
        description="Graph-based multisample tests of distributional balance.",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    test = subparsers.add_parser("test", help="run one balance test on a CSV dataset")
    _add_csv_arguments(test)
    test.add_argument("--method", required=True, choices=METHODS)
    test.add_argument(
        "--form",
        default=None,
        choices=FORMS,
        help="test form (default: wald, except runs which defaults to min)",
    )
    test.add_argument("--k", type=int, default=None, help="kNN neighbor count (default N//10)")
    test.add_argument("--metric", default="euclidean", choices=_METRICS)
    test.add_argument("--path-variant", default="greedy_edge", choices=PATH_VARIANTS)
    test.add_argument("--mc", type=int, default=100_000, help="Monte Carlo draws for extremum p-values")
    test.add_argument("--perm-draws", type=int, default=10_000, help="permutation draws for crossmatch moments")
    _add_common_arguments(test)
    test.set_defaults(handler=_cmd_test)

    simulate = subparsers.add_parser("simulate", help="run a one-cell power study")
    simulate.add_argument("--kind", required=True, choices=("location", "scale", "correlation", "motivating", "null"))
    simulate.add_argument("--delta", type=float, default=0.0)
    simulate.add_argument("--d", type=int, default=10, help="covariate dimension")
    simulate.add_argument("--groups", type=int, default=5, help="number of groups G")
    simulate.add_argument("--sizes", default=None, help="comma-separated group sizes (default: 50g)")
    simulate.add_argument("--n-units", type=int, default=None, help="units for the motivating kind (default 150)")
    simulate.add_argument("--replicates", type=int, default=200)
    simulate.add_argument("--alpha", type=float, default=0.05)
    simulate.add_argument(
        "--methods",
        default=_DEFAULT_SIM_METHODS,
        help="comma-separated method[:form][:k=K][:variant=V] tokens",
    )
    simulate.add_argument("--name", default=None, help="scenario name (default: the kind)")
    simulate.add_argument("--mc", type=int, default=100_000)
    simulate.add_argument("--perm-draws", type=int, default=10_000)
    _add_common_arguments(simulate)
    simulate.set_defaults(handler=_cmd_simulate)

    graph = subparsers.add_parser("graph", help="emit a constructed graph as edge-list CSV")
    _add_csv_arguments(graph)
    graph.add_argument("--structure", required=True, choices=("knn", "path", "matching"))
    graph.add_argument("--k", type=int, default=None)
    graph.add_argument("--metric", default="euclidean", choices=_METRICS)
    graph.add_argument("--path-variant", default="greedy_edge", choices=PATH_VARIANTS)
    _add_common_arguments(graph)
    graph.set_defaults(handler=_cmd_graph)

    oracle = subparsers.add_parser(
        "oracle", help="exact permutation moments for a tiny dataset"
    )
    _add_csv_arguments(oracle)
    oracle.add_argument("--statistic", required=True, choices=tuple(_ORACLE_KINDS))
    oracle.add_argument("--k", type=int, default=None)
    oracle.add_argument("--metric", default="euclidean", choices=_METRICS)
    oracle.add_argument("--path-variant", default="greedy_edge", choices=PATH_VARIANTS)
    _add_common_arguments(oracle)
    oracle.set_defaults(handler=_cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        args.handler(args)
    except GraphBalanceError as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    except OSError as error:
        print(f"error: {error}", file=sys.stderr)
        return 1
    return 0


if __name__ == "__main__":
    raise SystemExit(main())
