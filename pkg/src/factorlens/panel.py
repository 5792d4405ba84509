"""CSV ingestion of return panels: assets plus named factor columns.

Input files are UTF-8, comma-separated, with a header row and one column
per series; an optional leading column of timestamps (any string) is kept
only for ordering. Rows are ascending in time. Every referenced cell must
parse as a finite decimal; errors report the offending row and column.
"""

from __future__ import annotations

import csv
import math
import os
from dataclasses import dataclass

import numpy as np

from .errors import (
    BadDimension,
    MissingColumn,
    MissingValue,
    ParseError,
    TooFewRows,
)

_NA_TOKENS = {"", "na", "n/a", "nan", "null", "none", "."}


@dataclass(frozen=True)
class ReturnsPanel:
    """Ingested data panel; value columns are assets first, then factors."""

    labels: tuple[str, ...]
    times: tuple[str, ...]
    values: np.ndarray  # T x (p + K)
    asset_columns: tuple[int, ...]  # indices into labels
    factor_columns: tuple[int, ...]
    demean: bool = False

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise BadDimension("panel values must be a T x (p+K) matrix")
        if set(self.asset_columns) & set(self.factor_columns):
            raise BadDimension("asset and factor column sets must be disjoint")
        if values.shape[1] != len(self.asset_columns) + len(self.factor_columns):
            raise BadDimension("value columns must match asset plus factor counts")
        if values.shape[0] != len(self.times):
            raise BadDimension("times must have one entry per row")
        if not np.all(np.isfinite(values)):
            raise MissingValue("panel contains non-finite values")
        if values.shape[0] <= values.shape[1]:
            raise TooFewRows(
                f"need T > p + K, got T={values.shape[0]}, p+K={values.shape[1]}"
            )
        values.flags.writeable = False
        object.__setattr__(self, "values", values)

    @property
    def p(self) -> int:
        return len(self.asset_columns)

    @property
    def K(self) -> int:
        return len(self.factor_columns)

    @property
    def T(self) -> int:
        return self.values.shape[0]

    @property
    def asset_names(self) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in self.asset_columns)

    @property
    def factor_names(self) -> tuple[str, ...]:
        return tuple(self.labels[i] for i in self.factor_columns)

    def data_matrices(self) -> tuple[np.ndarray, np.ndarray]:
        """(X, F) with X p-by-T and F K-by-T."""
        X = self.values[:, : self.p].T.copy()
        F = self.values[:, self.p :].T.copy()
        return X, F

    def subset(self, asset_indices) -> "ReturnsPanel":
        """Panel restricted to the given asset positions (0-based, into assets)."""
        asset_indices = tuple(int(i) for i in asset_indices)
        if not asset_indices:
            raise BadDimension("subset needs at least one asset")
        if len(set(asset_indices)) != len(asset_indices):
            raise BadDimension("subset indices must be distinct")
        if not all(0 <= i < self.p for i in asset_indices):
            raise BadDimension(f"subset indices must lie in [0, {self.p})")
        cols = list(asset_indices) + list(range(self.p, self.p + self.K))
        return ReturnsPanel(
            labels=self.labels,
            times=self.times,
            values=self.values[:, cols],
            asset_columns=tuple(self.asset_columns[i] for i in asset_indices),
            factor_columns=self.factor_columns,
            demean=self.demean,
        )


def _parse_cell(raw: str, row: int, column: str) -> float:
    text = raw.strip()
    if text.lower() in _NA_TOKENS:
        raise MissingValue(f"missing value at row {row}, column {column!r}")
    try:
        value = float(text)
    except ValueError:
        raise ParseError(
            f"cannot parse {raw!r} as a number at row {row}, column {column!r}"
        ) from None
    if not math.isfinite(value):
        raise ParseError(f"non-finite value at row {row}, column {column!r}")
    return value


def ingest_csv(source, asset_names, factor_names, demean: bool = False) -> ReturnsPanel:
    """Read a panel from a CSV path or open text file.

    asset_names and factor_names select header columns; a leading column
    not named by either list is treated as the time column. Row order is
    preserved as time order.
    """
    asset_names = list(asset_names)
    factor_names = list(factor_names)
    if not asset_names:
        raise BadDimension("at least one asset column is required")
    overlap = set(asset_names) & set(factor_names)
    if overlap:
        raise BadDimension(f"columns listed as both asset and factor: {sorted(overlap)}")
    if isinstance(source, (str, os.PathLike)):
        with open(source, "r", encoding="utf-8", newline="") as fh:
            rows = list(csv.reader(fh))
    else:
        rows = list(csv.reader(source))
    if not rows:
        raise ParseError("file is empty; a header row is required")
    header = [h.strip() for h in rows[0]]
    positions = {}
    for name in asset_names + factor_names:
        if name not in header:
            raise MissingColumn(f"column {name!r} not found in header {header}")
        positions[name] = header.index(name)
    wanted = asset_names + factor_names
    time_pos = None
    if header and header[0] not in wanted:
        time_pos = 0

    records = rows[1:]
    if not records:
        raise TooFewRows("file has a header but no data rows")
    values = np.empty((len(records), len(wanted)))
    times = []
    for r, record in enumerate(records, start=2):  # 1-based file rows, row 1 = header
        if len(record) != len(header):
            raise ParseError(
                f"row {r} has {len(record)} cells, header has {len(header)}"
            )
        for k, name in enumerate(wanted):
            values[r - 2, k] = _parse_cell(record[positions[name]], r, name)
        times.append(record[time_pos].strip() if time_pos is not None else str(r - 2))

    p, K = len(asset_names), len(factor_names)
    if values.shape[0] <= p + K:
        raise TooFewRows(f"need T > p + K, got T={values.shape[0]}, p+K={p + K}")
    labels = tuple(header)
    return ReturnsPanel(
        labels=labels,
        times=tuple(times),
        values=values,
        asset_columns=tuple(header.index(n) for n in asset_names),
        factor_columns=tuple(header.index(n) for n in factor_names),
        demean=demean,
    )


def export_panel_csv(panel: ReturnsPanel, target) -> None:
    """Write a panel back out; re-ingesting with the same names reproduces it."""
    header = ["time"] + list(panel.asset_names) + list(panel.factor_names)

    def _write(fh) -> None:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for t in range(panel.T):
            row = [panel.times[t]] + [repr(float(v)) for v in panel.values[t]]
            writer.writerow(row)

    if isinstance(target, (str, os.PathLike)):
        with open(target, "w", encoding="utf-8", newline="") as fh:
            _write(fh)
    else:
        _write(target)
