"""CSV dataset ingestion and canonical report serialization.

:func:`read_csv_dataset` loads a labeled multivariate sample from a CSV
file, remapping the group column to integer labels 1..G in order of first
appearance and optionally adding a small seeded uniform jitter to selected
covariates (a standard device for breaking distance ties before matching).

:func:`write_report` emits a :class:`TestReport` or :class:`PowerTable` as
JSON or CSV.  JSON output uses sorted keys and shortest round-trip float
repr, so serialize → parse → reserialize is byte-identical.
"""

from __future__ import annotations

import csv
import dataclasses
import json
from collections.abc import Mapping
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np

from .data import Dataset
from .errors import ConfigurationError, ValidationError
from .hypotests import TestReport
from .numerics import RandomStream
from .simulate import PowerTable

__all__ = [
    "CsvSchema",
    "LoadedDataset",
    "read_csv_dataset",
    "report_json",
    "report_to_dict",
    "write_report",
]

_DEFAULT_JITTER_FRACTION = 1e-6


@dataclass(frozen=True)
class CsvSchema:
    """Column layout of an input CSV.

    ``covariate_columns=None`` takes every non-group column in header order.
    ``jitter_columns`` maps covariate names to a jitter scale; ``None`` means
    the default scale of 1e-6 times the column's range, and 0 degenerates to
    no noise.
    """

    group_column: str
    covariate_columns: tuple[str, ...] | None = None
    jitter_columns: Mapping[str, float | None] = field(default_factory=dict)
    delimiter: str = ","

    def __post_init__(self) -> None:
        if self.covariate_columns is not None:
            columns = tuple(self.covariate_columns)
            object.__setattr__(self, "covariate_columns", columns)
            if self.group_column in columns:
                raise ValidationError(
                    f"group column {self.group_column!r} cannot also be a covariate"
                )
            if len(set(columns)) != len(columns):
                raise ValidationError("covariate columns must be distinct")
        object.__setattr__(self, "jitter_columns", dict(self.jitter_columns))
        for name, scale in self.jitter_columns.items():
            if scale is not None and not scale >= 0:
                raise ValidationError(
                    f"jitter scale for column {name!r} must be nonnegative"
                )
        if len(self.delimiter) != 1:
            raise ValidationError("delimiter must be a single character")


class LoadedDataset(NamedTuple):
    """A parsed dataset plus the original-label → 1..G mapping."""

    dataset: Dataset
    label_mapping: dict[str, int]


def read_csv_dataset(path: str, schema: CsvSchema, seed: int = 0) -> LoadedDataset:
    """Load a grouped multivariate sample from a CSV file.

    Group labels are remapped to 1..G in order of first appearance and the
    mapping is returned for auditability.  Covariate cells must parse as
    finite reals; failures report the offending data row and column.  Jitter
    columns receive additive uniform noise in (-scale/2, scale/2) from the
    stream seeded by ``seed``.
    """
    with open(path, newline="", encoding="utf-8") as handle:
        reader = csv.DictReader(handle, delimiter=schema.delimiter)
        header = reader.fieldnames
        if header is None:
            raise ValidationError(f"{path}: empty file, no header row")
        if schema.group_column not in header:
            raise ValidationError(
                f"{path}: group column {schema.group_column!r} not found in header"
            )
        if schema.covariate_columns is None:
            covariates = tuple(c for c in header if c != schema.group_column)
        else:
            covariates = schema.covariate_columns
            missing = [c for c in covariates if c not in header]
            if missing:
                raise ValidationError(
                    f"{path}: covariate columns {missing} not found in header"
                )
        if not covariates:
            raise ValidationError(f"{path}: no covariate columns")
        unknown_jitter = [c for c in schema.jitter_columns if c not in covariates]
        if unknown_jitter:
            raise ValidationError(
                f"{path}: jitter columns {unknown_jitter} are not covariates"
            )

        raw_labels: list[str] = []
        rows: list[list[float]] = []
        for row_index, record in enumerate(reader, start=1):
            label_text = record.get(schema.group_column)
            if label_text is None:
                raise ValidationError(
                    f"{path}: row {row_index} is missing the group column"
                )
            raw_labels.append(label_text)
            values = []
            for name in covariates:
                text = record.get(name)
                if text is None:
                    raise ValidationError(
                        f"{path}: row {row_index} is missing column {name!r}"
                    )
                try:
                    value = float(text)
                except ValueError:
                    value = np.nan
                if not np.isfinite(value):
                    raise ValidationError(
                        f"{path}: row {row_index}, column {name!r}: "
                        f"cannot parse {text!r} as a finite real"
                    )
                values.append(value)
            rows.append(values)

    if not rows:
        raise ValidationError(f"{path}: no data rows")
    label_mapping: dict[str, int] = {}
    for raw in raw_labels:
        label_mapping.setdefault(raw, len(label_mapping) + 1)
    if len(label_mapping) < 2:
        raise ValidationError(
            f"{path}: found {len(label_mapping)} group(s), need at least 2"
        )
    data = np.asarray(rows, dtype=np.float64)
    labels = np.array([label_mapping[raw] for raw in raw_labels], dtype=np.int64)

    if schema.jitter_columns:
        gen = RandomStream(seed=seed).generator
        for index, name in enumerate(covariates):
            if name not in schema.jitter_columns:
                continue
            scale = schema.jitter_columns[name]
            if scale is None:
                column = data[:, index]
                scale = _DEFAULT_JITTER_FRACTION * float(column.max() - column.min())
            if scale > 0:
                data[:, index] += gen.uniform(-scale / 2, scale / 2, size=data.shape[0])

    return LoadedDataset(dataset=Dataset(data=data, labels=labels), label_mapping=label_mapping)


def _jsonable(value):
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, dict):
        return {key: _jsonable(v) for key, v in value.items()}
    return value


def report_to_dict(report: TestReport) -> dict:
    """Flatten a test report (including nested graph metadata) to JSON types."""
    return _jsonable(dataclasses.asdict(report))


def report_json(report: TestReport, extra: Mapping[str, object] | None = None) -> str:
    """Canonical JSON text of a report: sorted keys, trailing newline."""
    payload = report_to_dict(report)
    if extra:
        payload.update(_jsonable(dict(extra)))
    return json.dumps(payload, sort_keys=True, indent=2) + "\n"


def _flatten(payload: dict, prefix: str = "") -> dict:
    flat: dict = {}
    for key, value in payload.items():
        name = f"{prefix}{key}"
        if isinstance(value, dict):
            flat.update(_flatten(value, prefix=f"{name}."))
        else:
            flat[name] = value
    return flat


def write_report(report, format: str, path: str) -> None:
    """Write a TestReport or PowerTable to ``path`` as JSON or CSV."""
    if format not in ("json", "csv"):
        raise ConfigurationError(f"format must be 'json' or 'csv', got {format!r}")
    if isinstance(report, TestReport):
        if format == "json":
            text = report_json(report)
        else:
            flat = _flatten(report_to_dict(report))
            keys = sorted(flat)
            writer_buffer = [",".join(keys)]
            writer_buffer.append(
                ",".join("" if flat[k] is None else f"{flat[k]!r}" if isinstance(flat[k], float) else str(flat[k]) for k in keys)
            )
            text = "\n".join(writer_buffer) + "\n"
    elif isinstance(report, PowerTable):
        if format == "csv":
            text = report.to_csv()
        else:
            rows = [_jsonable(dataclasses.asdict(row)) for row in report.rows]
            text = json.dumps({"rows": rows}, sort_keys=True, indent=2) + "\n"
    else:
        raise ConfigurationError(
            f"write_report expects a TestReport or PowerTable, got {type(report).__name__}"
        )
    with open(path, "w", encoding="utf-8", newline="") as handle:
        handle.write(text)
