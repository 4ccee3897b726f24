"""Scenario generators, univariate diagnostics, and the power-study driver.

Gaussian scenarios perturb one distributional aspect per group — location,
scale, or equicorrelation — by a magnitude ``delta`` that grows linearly with
the group index, so group 1 is always standard normal.  The "motivating"
scenario draws two covariates and assigns each unit to one of three groups by
a softmax whose logits are nonlinear in the covariates, producing samples
whose group means are nearly balanced while the joint distributions differ.

:func:`power_study` runs a grid of scenarios against a list of test
specifications, reusing the same generated dataset for every test within a
replicate (paired comparisons), and tallies rejection rates at a fixed level
into a :class:`PowerTable` with CSV emission.
"""

from __future__ import annotations

import io
from collections.abc import Callable, Mapping, Sequence
from dataclasses import dataclass, field, replace
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ValidationError
from .hypotests import TestConfig, TestReport, balance_test
from .numerics import RandomStream, f_sf

__all__ = [
    "DiagnosticRow",
    "MethodSpec",
    "MotivatingDraw",
    "PowerRow",
    "PowerTable",
    "ScenarioConfig",
    "gen_gaussian_scenario",
    "gen_motivating",
    "power_study",
    "scenario_dataset",
    "univariate_diagnostics",
]

SCENARIO_KINDS = ("location", "scale", "correlation", "motivating", "null")

POWER_CSV_HEADER = (
    "scenario,kind,delta,d,G,method,form,replicates,rejection_rate,mc_se,seed"
)

_MOTIVATING_MAX_REDRAWS = 100


@dataclass(frozen=True)
class ScenarioConfig:
    """One cell of a simulation design.

    ``sizes=None`` applies the default rule n_g = 50 g.  ``delta`` is the
    per-group increment: group g has mean (g-1) delta (location), variance
    1 + (g-1) delta (scale), or equicorrelation (g-1) delta / (G-1)
    (correlation; requires delta in [0, 1) so every covariance is positive
    definite).  The motivating kind ignores delta/d/G and draws its own
    labels over ``n_units`` units (default 150).
    """

    name: str
    kind: str
    delta: float = 0.0
    d: int = 10
    n_groups: int = 5
    sizes: tuple[int, ...] | None = None
    replicates: int = 200
    seed: int = 0
    n_units: int | None = None

    def __post_init__(self) -> None:
        if self.kind not in SCENARIO_KINDS:
            raise ConfigurationError(
                f"kind must be one of {SCENARIO_KINDS}, got {self.kind!r}"
            )
        if self.kind == "motivating":
            return
        if self.d < 1 or self.n_groups < 1 or self.replicates < 1:
            raise ConfigurationError("d, G and replicates must be positive")
        if self.delta < 0:
            raise ConfigurationError("delta must be nonnegative")
        if self.kind == "correlation" and not 0.0 <= self.delta < 1.0:
            raise ConfigurationError(
                "correlation scenarios require delta in [0, 1) for positive "
                "definite covariances"
            )
        sizes = self.group_sizes()
        if any(s < 2 for s in sizes):
            raise ConfigurationError("all group sizes must be at least 2")

    def group_sizes(self) -> tuple[int, ...]:
        if self.sizes is not None:
            return tuple(int(s) for s in self.sizes)
        return tuple(50 * g for g in range(1, self.n_groups + 1))


class MotivatingDraw(NamedTuple):
    """A motivating-scenario draw plus how many full redraws it needed."""

    dataset: Dataset
    regenerations: int


def _equicorrelated_cholesky(d: int, rho: float) -> np.ndarray:
    """Lower Cholesky factor of (1-rho) I + rho 11'."""
    sigma = np.full((d, d), rho)
    np.fill_diagonal(sigma, 1.0)
    return np.linalg.cholesky(sigma)


def gen_gaussian_scenario(config: ScenarioConfig, replicate_index: int) -> Dataset:
    """Draw one replicate of a Gaussian location/scale/correlation scenario.

    Group g of size n_g is drawn from N(mu_g, Sigma_g) with the perturbation
    determined by ``config.kind``; the underlying standard normals depend only
    on (seed, replicate_index), so at delta = 0 all kinds produce the same
    dataset from the same stream.
    """
    if config.kind == "motivating":
        raise ConfigurationError("use gen_motivating for the motivating scenario")
    if replicate_index < 0:
        raise ValidationError("replicate_index must be nonnegative")
    sizes = config.group_sizes()
    n = sum(sizes)
    stream = RandomStream(seed=config.seed).derive(replicate_index)
    z = stream.generator.standard_normal((n, config.d))
    x = np.empty_like(z)
    delta = float(config.delta)
    g_count = len(sizes)
    start = 0
    for g, size in enumerate(sizes, start=1):
        block = z[start : start + size]
        if config.kind == "location":
            x[start : start + size] = block + (g - 1) * delta
        elif config.kind == "scale":
            x[start : start + size] = block * np.sqrt(1.0 + (g - 1) * delta)
        elif config.kind == "correlation":
            rho = (g - 1) * delta / (g_count - 1) if g_count > 1 else 0.0
            if rho == 0.0:
                x[start : start + size] = block
            else:
                chol = _equicorrelated_cholesky(config.d, rho)
                x[start : start + size] = block @ chol.T
        else:  # null
            x[start : start + size] = block
        start += size
    labels = np.repeat(np.arange(1, g_count + 1), sizes)
    return Dataset(data=x, labels=labels)


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    expd = np.exp(shifted)
    return expd / expd.sum(axis=1, keepdims=True)


def motivating_probabilities(x: np.ndarray) -> np.ndarray:
    """Group-membership probabilities of the motivating scenario.

    The three logits are nonlinear in the two covariates:
    eta_1 = 0.1 x1 - 0.1 x2 - x1 x2,
    eta_2 = -0.2 x1 + 0.2 x2 + 0.5 x1^2,
    eta_3 = -0.1 x1 + 0.2 x2 - 2 x1 x2,
    mapped through a row-wise softmax.
    """
    x = np.asarray(x, dtype=np.float64)
    x1, x2 = x[:, 0], x[:, 1]
    eta = np.column_stack(
        (
            0.1 * x1 - 0.1 * x2 - x1 * x2,
            -0.2 * x1 + 0.2 * x2 + 0.5 * x1**2,
            -0.1 * x1 + 0.2 * x2 - 2.0 * x1 * x2,
        )
    )
    return _softmax_rows(eta)


def gen_motivating(
    n_units: int = 150, replicate_index: int = 0, seed: int = 0
) -> MotivatingDraw:
    """Draw the three-group motivating scenario.

    X1, X2 are i.i.d. standard normal and each unit's group is categorical
    with the softmax probabilities of :func:`motivating_probabilities`.  If
    any group comes out empty the whole dataset is redrawn (up to 100 times),
    and the number of redraws is reported.
    """
    if n_units < 3:
        raise ValidationError("the motivating scenario needs at least 3 units")
    stream = RandomStream(seed=seed).derive(replicate_index)
    gen = stream.generator
    for regenerations in range(_MOTIVATING_MAX_REDRAWS + 1):
        x = gen.standard_normal((n_units, 2))
        probs = motivating_probabilities(x)
        u = gen.random(n_units)
        labels = (probs.cumsum(axis=1) < u[:, None]).sum(axis=1) + 1
        if np.bincount(labels, minlength=4)[1:4].min() > 0:
            dataset = Dataset(data=x, labels=labels)
            return MotivatingDraw(dataset=dataset, regenerations=regenerations)
    raise RuntimeError(
        "failed to draw a dataset with all three groups non-empty "
        f"within {_MOTIVATING_MAX_REDRAWS} redraws"
    )


def scenario_dataset(config: ScenarioConfig, replicate_index: int) -> Dataset:
    """Dispatch to the right generator for the scenario kind."""
    if config.kind == "motivating":
        return gen_motivating(
            n_units=config.n_units or 150,
            replicate_index=replicate_index,
            seed=config.seed,
        ).dataset
    return gen_gaussian_scenario(config, replicate_index)


@dataclass(frozen=True)
class DiagnosticRow:
    """Univariate balance summary for one derived covariate."""

    name: str
    std_diff: float
    f_statistic: float
    f_p_value: float


def univariate_diagnostics(
    dataset: Dataset,
    covariate_functions: Mapping[str, Callable[[np.ndarray], np.ndarray]],
) -> list[DiagnosticRow]:
    """Standardized mean differences and one-way ANOVA F tests per covariate.

    Each function maps the data matrix to one derived column.  Reported per
    column: (1/G) sum_g |mean_g - mean_all| / sd_all (sd with ddof=1) and the
    p-value of the one-way ANOVA F statistic with (G-1, N-G) degrees of
    freedom.
    """
    n = dataset.n_units
    g_count = dataset.n_groups
    if g_count < 2:
        raise ValidationError("diagnostics require at least 2 groups")
    rows = []
    for name, function in covariate_functions.items():
        column = np.asarray(function(dataset.data), dtype=np.float64).reshape(-1)
        if column.shape != (n,):
            raise ValidationError(
                f"covariate function {name!r} must produce one value per unit"
            )
        overall_sd = column.std(ddof=1)
        if overall_sd <= 0:
            raise ValidationError(
                f"covariate function {name!r} has zero overall variance"
            )
        overall_mean = column.mean()
        group_means = np.array(
            [column[dataset.labels == g].mean() for g in range(1, g_count + 1)]
        )
        std_diff = float(np.abs(group_means - overall_mean).mean() / overall_sd)
        sizes = dataset.group_sizes.astype(np.float64)
        between = float((sizes * (group_means - overall_mean) ** 2).sum()) / (g_count - 1)
        within_ss = 0.0
        for g in range(1, g_count + 1):
            block = column[dataset.labels == g]
            within_ss += float(((block - block.mean()) ** 2).sum())
        if n - g_count <= 0:
            raise ValidationError("diagnostics require N > G")
        within = within_ss / (n - g_count)
        if within > 0:
            f_stat = between / within
            p_value = f_sf(f_stat, g_count - 1, n - g_count)
        elif between > 0:
            f_stat, p_value = np.inf, 0.0
        else:
            f_stat, p_value = 0.0, 1.0
        rows.append(
            DiagnosticRow(
                name=name,
                std_diff=std_diff,
                f_statistic=float(f_stat),
                f_p_value=float(p_value),
            )
        )
    return rows


@dataclass(frozen=True)
class MethodSpec:
    """One test to run in a power study.

    ``name`` defaults to the method, annotated with any non-default k or
    path variant so grid rows stay distinguishable.
    """

    method: str
    form: str = "wald"
    k: int | None = None
    path_variant: str = "greedy_edge"
    metric: str = "euclidean"
    name: str | None = None

    def display_name(self) -> str:
        if self.name is not None:
            return self.name
        parts = [self.method]
        if self.k is not None:
            parts.append(f"k={self.k}")
        if self.method in ("runs", "ranks") and self.path_variant != "greedy_edge":
            parts.append(self.path_variant)
        return ":".join(parts)


@dataclass(frozen=True)
class PowerRow:
    """Rejection rate of one (scenario, method, form) cell."""

    scenario: str
    kind: str
    delta: float
    d: int
    n_groups: int
    method: str
    form: str
    replicates: int
    rejection_rate: float
    mc_se: float
    seed: int
    failures: int = 0


@dataclass
class PowerTable:
    """Rows of a power study plus CSV emission with a fixed header."""

    rows: list[PowerRow] = field(default_factory=list)

    def find(self, scenario: str, method: str, form: str | None = None) -> PowerRow:
        for row in self.rows:
            if row.scenario == scenario and row.method == method and (
                form is None or row.form == form
            ):
                return row
        raise KeyError(f"no row for scenario={scenario!r} method={method!r} form={form!r}")

    def to_csv(self) -> str:
        buffer = io.StringIO()
        buffer.write(POWER_CSV_HEADER + "\n")
        for row in self.rows:
            buffer.write(
                f"{row.scenario},{row.kind},{row.delta!r},{row.d},{row.n_groups},"
                f"{row.method},{row.form},{row.replicates},"
                f"{row.rejection_rate!r},{row.mc_se!r},{row.seed}\n"
            )
        return buffer.getvalue()

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as handle:
            handle.write(self.to_csv())


def _test_seed(master_seed: int, cell_index: int, replicate: int, method_index: int) -> int:
    sequence = np.random.SeedSequence(
        entropy=master_seed & 0xFFFFFFFFFFFFFFFF,
        spawn_key=(1 + cell_index, replicate, method_index),
    )
    return int(sequence.generate_state(1, np.uint64)[0])


def power_study(
    config_grid: Sequence[ScenarioConfig],
    methods: Sequence[MethodSpec],
    alpha: float = 0.05,
    replicates: int | None = None,
    seed: int | None = None,
    n_mc: int = 100_000,
    permutation_draws: int = 10_000,
) -> PowerTable:
    """Estimate rejection rates over a scenario grid.

    For each scenario cell and replicate, one dataset is generated and every
    method in ``methods`` is run on it (shared data makes cross-method power
    differences paired).  ``replicates``/``seed`` override the per-config
    values when given.  A test that raises is tallied as a failure for its
    row (and cannot reject); failures are recorded on the row but kept out of
    the fixed CSV columns.
    """
    if not 0.0 < alpha < 1.0:
        raise ConfigurationError("alpha must lie in (0, 1)")
    table = PowerTable()
    for cell_index, base_config in enumerate(config_grid):
        config = base_config
        if replicates is not None or seed is not None:
            config = replace(
                base_config,
                replicates=replicates if replicates is not None else base_config.replicates,
                seed=seed if seed is not None else base_config.seed,
            )
        n_reps = config.replicates
        rejections = np.zeros(len(methods), dtype=np.int64)
        failures = np.zeros(len(methods), dtype=np.int64)
        for rep in range(n_reps):
            dataset = scenario_dataset(config, rep)
            for m_index, spec in enumerate(methods):
                test_config = TestConfig(
                    k=spec.k,
                    path_variant=spec.path_variant,
                    metric=spec.metric,
                    n_mc=n_mc,
                    permutation_draws=permutation_draws,
                    seed=_test_seed(config.seed, cell_index, rep, m_index),
                )
                try:
                    report: TestReport = balance_test(
                        dataset, spec.method, spec.form, test_config
                    )
                except Exception:
                    failures[m_index] += 1
                    continue
                if report.p_value <= alpha:
                    rejections[m_index] += 1
        for m_index, spec in enumerate(methods):
            rate = rejections[m_index] / n_reps
            table.rows.append(
                PowerRow(
                    scenario=config.name,
                    kind=config.kind,
                    delta=float(config.delta),
                    d=config.d if config.kind != "motivating" else 2,
                    n_groups=config.n_groups if config.kind != "motivating" else 3,
                    method=spec.display_name(),
                    form=spec.form,
                    replicates=n_reps,
                    rejection_rate=float(rate),
                    mc_se=float(np.sqrt(rate * (1.0 - rate) / n_reps)),
                    seed=config.seed,
                    failures=int(failures[m_index]),
                )
            )
    return table
