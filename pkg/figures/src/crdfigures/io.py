"""Readers for the versioned CSV artifacts emitted by the experiment CLI.

Every artifact starts with a "# schema=<id>" line, optionally followed by
more "# key=value ..." comment lines, then a regular CSV header and rows.
Readers validate both the schema id and the column set and raise
SchemaError with an expected-vs-found diagnostic on any mismatch.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np


class SchemaError(ValueError):
    """Input file does not match the declared CSV schema."""


EXPECTED_COLUMNS = {
    "results-v1": ["experiment", "r", "delta", "run", "eta", "eta_stderr",
                   "mean_pi_L", "mean_pi_H", "seed"],
    "nash-v1": ["experiment", "r", "delta", "pi_L", "pi_H", "residual", "refined"],
    "bestresponse-v1": ["experiment", "r", "delta", "class", "opponent_pi",
                        "response_min", "response_max"],
    "welfare-v1": ["experiment", "r", "delta", "max_welfare",
                   "argmax_pi_L", "argmax_pi_H"],
}


@dataclass
class Table:
    schema: str
    columns: list[str]
    rows: list[dict[str, str]]
    meta: dict[str, str] = field(default_factory=dict)

    def floats(self, column: str) -> np.ndarray:
        return np.array([float(row[column]) for row in self.rows])


def _split_file(path) -> tuple[str, dict[str, str], list[str]]:
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"{path}: file does not exist")
    schema = ""
    meta: dict[str, str] = {}
    body: list[str] = []
    for line in path.read_text().splitlines():
        if line.startswith("# schema="):
            schema = line.split("=", 1)[1].strip()
        elif line.startswith("#"):
            for token in line[1:].split():
                if "=" in token:
                    k, v = token.split("=", 1)
                    meta[k] = v
        else:
            body.append(line)
    if not schema:
        raise SchemaError(f"{path}: missing '# schema=' header line")
    return schema, meta, body


def read_table(path, expected_schema: str) -> Table:
    """Read a row-oriented artifact, checking schema id and columns."""
    schema, meta, body = _split_file(path)
    if schema != expected_schema:
        raise SchemaError(
            f"{path}: schema mismatch: expected {expected_schema}, found {schema}")
    reader = csv.reader(body)
    columns = next(reader, None)
    if columns is None:
        raise SchemaError(f"{path}: no header row")
    expected_cols = EXPECTED_COLUMNS[expected_schema]
    if columns != expected_cols:
        raise SchemaError(
            f"{path}: column mismatch: expected {expected_cols}, found {columns}")
    rows = [dict(zip(columns, row)) for row in reader if row]
    return Table(schema=schema, columns=columns, rows=rows, meta=meta)


@dataclass
class WelfareGridTable:
    pi_L: np.ndarray        # row axis values
    pi_H: np.ndarray        # column axis values
    welfare: np.ndarray     # [pi_L index, pi_H index]
    argmax: tuple[float, float] | None
    meta: dict[str, str]


def read_welfare_grid(path) -> WelfareGridTable:
    """Read a dense welfare-grid-v1 matrix with axis headers."""
    schema, meta, body = _split_file(path)
    if schema != "welfare-grid-v1":
        raise SchemaError(
            f"{path}: schema mismatch: expected welfare-grid-v1, found {schema}")
    reader = csv.reader(body)
    header = next(reader, None)
    if not header or header[0] != "pi_L\\pi_H":
        found = header[0] if header else "nothing"
        raise SchemaError(
            f"{path}: column mismatch: expected corner cell 'pi_L\\pi_H', found {found}")
    pi_H = np.array([float(v) for v in header[1:]])
    pi_L = []
    values = []
    for row in reader:
        if not row:
            continue
        pi_L.append(float(row[0]))
        values.append([float(v) for v in row[1:]])
    welfare = np.array(values)
    if welfare.size and welfare.shape != (len(pi_L), len(pi_H)):
        raise SchemaError(f"{path}: ragged welfare matrix")
    argmax = None
    if "argmax_pi_L" in meta and "argmax_pi_H" in meta:
        argmax = (float(meta["argmax_pi_L"]), float(meta["argmax_pi_H"]))
    return WelfareGridTable(pi_L=np.array(pi_L), pi_H=pi_H, welfare=welfare,
                            argmax=argmax, meta=meta)
