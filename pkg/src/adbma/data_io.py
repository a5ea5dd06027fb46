"""Dataset ingestion, the synthetic-data generator, and all CSV formats.

All writers are deterministic (same inputs give byte-identical files) and
serialize floats with 17 significant digits so values round-trip exactly.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass

import numpy as np

from .core_model import Dataset
from .diagnostics import ChainOutput, EfficiencyReport
from .errors import ConstantColumn, MissingColumn, ParseError, TooFewColumns

RESPONSE_NOISE_SD = 2.0
TRUE_MODEL_SIZE = 7

_SE_FIELDS = ("ess", "cpu_seconds", "er", "re", "accept_rate")


def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


@dataclass(frozen=True)
class RawTable:
    """A parsed, rectangular, all-finite numeric CSV."""

    header: list[str]
    rows: np.ndarray


def read_table(path) -> RawTable:
    """Parse a headered CSV of floats; malformed cells name their position."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise ParseError(f"{path}: empty file") from None
        header = [name.strip() for name in header]
        rows = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(
                    f"{path}:{line_no}: expected {len(header)} cells, got {len(row)}")
            parsed = []
            for name, cell in zip(header, row):
                try:
                    value = float(cell)
                except ValueError:
                    raise ParseError(
                        f"{path}:{line_no}: non-numeric cell in column {name!r}:"
                        f" {cell!r}") from None
                if not math.isfinite(value):
                    raise ParseError(
                        f"{path}:{line_no}: non-finite value in column {name!r}")
                parsed.append(value)
            rows.append(parsed)
    if not rows:
        raise ParseError(f"{path}: no data rows")
    return RawTable(header=header, rows=np.asarray(rows, dtype=np.float64))


def load_csv(path, response_column: str) -> Dataset:
    """Load a dataset, demeaning the non-response columns in header order."""
    table = read_table(path)
    if response_column not in table.header:
        raise MissingColumn(
            f"{path}: response column {response_column!r} not in header")
    response_idx = table.header.index(response_column)
    y = table.rows[:, response_idx]
    keep = [j for j in range(len(table.header)) if j != response_idx]
    names = [table.header[j] for j in keep]
    X = table.rows[:, keep]
    for j, name in enumerate(names):
        if np.ptp(X[:, j]) == 0.0:
            raise ConstantColumn(
                f"{path}: column {name!r} has zero variance and is"
                " unidentifiable after demeaning")
    return Dataset.from_arrays(y, X, columns=names)


def simulate_design(n: int, p: int, rng) -> np.ndarray:
    """Correlated design: z_i = z*_i + e with a shared standard-normal e,
    giving pairwise correlation 0.5; columns are demeaned."""
    if n < 3 or p < 1:
        raise ValueError("need n >= 3 and p >= 1")
    z_star = rng.standard_normal((n, p))
    e = rng.standard_normal(n)
    Z = z_star + e[:, None]
    return Z - Z.mean(axis=0)


def simulate_response(design: np.ndarray, rng, v: np.ndarray | None = None):
    """Response y = 1 + sum of the first 7 design columns + 2 v.

    ``v`` is a standard-normal draw unless injected (test hook).  Returns
    (y, gamma_star) with gamma_star marking the 7 generating columns.
    """
    n, p = design.shape
    if p < TRUE_MODEL_SIZE:
        raise TooFewColumns(
            f"response generator needs at least {TRUE_MODEL_SIZE} columns, got {p}")
    if v is None:
        v = rng.standard_normal(n)
    y = 1.0 + design[:, :TRUE_MODEL_SIZE].sum(axis=1) + RESPONSE_NOISE_SD * v
    gamma_star = np.zeros(p, dtype=np.uint8)
    gamma_star[:TRUE_MODEL_SIZE] = 1
    return y, gamma_star


def default_columns(p: int) -> list[str]:
    return [f"x{i + 1}" for i in range(p)]


def simulate_dataset(n: int, p: int, seed: int):
    """Seeded design + response, packaged as a Dataset with its true model."""
    rng = np.random.default_rng(seed)
    design = simulate_design(n, p, rng)
    y, gamma_star = simulate_response(design, rng)
    return Dataset.from_arrays(y, design, columns=default_columns(p)), gamma_star


def write_dataset(dataset: Dataset, path, response_name: str = "y"):
    columns = list(dataset.columns) if dataset.columns else default_columns(dataset.p)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([response_name] + columns)
        for i in range(dataset.n):
            writer.writerow([_fmt(dataset.y[i])] + [_fmt(v) for v in dataset.X[i]])


def write_truth(gamma_star: np.ndarray, path, columns: list[str] | None = None):
    columns = columns or default_columns(gamma_star.shape[0])
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable", "included"])
        for name, bit in zip(columns, gamma_star):
            writer.writerow([name, int(bit)])


def write_report(report: EfficiencyReport, path,
                 se_rows: dict[str, dict[str, float]] | None = None):
    """Efficiency report CSV: method,ess,cpu_seconds,er,re,accept_rate.

    When per-method standard errors are supplied (replicated runs), one
    ``<field>_se`` column per metric is appended.
    """
    header = ["method", "ess", "cpu_seconds", "er", "re", "accept_rate"]
    if se_rows is not None:
        header += [f"{name}_se" for name in _SE_FIELDS]
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in report.rows:
            cells = [row.method, _fmt(row.ess), _fmt(row.cpu_seconds),
                     _fmt(row.er), _fmt(row.re), _fmt(row.accept_rate)]
            if se_rows is not None:
                se = se_rows.get(row.method, {})
                cells += [_fmt(se.get(name)) for name in _SE_FIELDS]
            writer.writerow(cells)


def write_traces(output: ChainOutput, path):
    """Selection-probability trace CSV, one row per block snapshot."""
    p = output.p
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["block"] + [f"coord_{i}" for i in range(p)])
        for block, sel in output.d_snapshots:
            writer.writerow([block] + [_fmt(v) for v in sel.d])


def write_pip_table(variables, pip_columns, path):
    """PIP table CSV: variable,pip_<method1>,pip_<method2>,...

    ``pip_columns`` is an ordered list of (method name, pip vector).
    """
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["variable"] + [f"pip_{name}" for name, _ in pip_columns])
        for i, variable in enumerate(variables):
            writer.writerow([variable] + [_fmt(vec[i]) for _, vec in pip_columns])


def read_pip_table(path):
    """Inverse of write_pip_table: returns (variables, ordered method->pips)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        if not header or header[0] != "variable":
            raise ParseError(f"{path}: not a PIP table (first column must be"
                             " 'variable')")
        methods = []
        for name in header[1:]:
            if not name.startswith("pip_"):
                raise ParseError(f"{path}: unexpected column {name!r}")
            methods.append(name[4:])
        variables = []
        values = []
        for line_no, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != len(header):
                raise ParseError(f"{path}:{line_no}: ragged row")
            variables.append(row[0])
            try:
                values.append([float(cell) for cell in row[1:]])
            except ValueError:
                raise ParseError(f"{path}:{line_no}: non-numeric PIP") from None
    matrix = np.asarray(values, dtype=np.float64)
    return variables, {m: matrix[:, j] for j, m in enumerate(methods)}
