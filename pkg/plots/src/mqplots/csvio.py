"""Reading and validating the CSV artifacts the mq CLI writes.

Every artifact starts with a `# config {json}` line, then a header row, then
data rows.  Validation is by figure kind: a missing column is reported by
name, and a table with no data rows is rejected outright.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from pathlib import Path


class SchemaError(ValueError):
    """Input CSV does not match the documented schema for the figure kind."""


REQUIRED_COLUMNS: dict[str, tuple[str, ...]] = {
    "c-sweep": ("c", "integral_f_c", "inv_c_minus_1"),
    "convergence": ("step", "i", "observed_rank", "expected_rank", "expected_initial_rank"),
    "logistic": ("x", "empirical", "finite_n", "limit"),
    "gap-hist": ("coordinate", "value", "count", "expected_count"),
}

_CONFIG_PREFIX = "# config "


@dataclass(frozen=True)
class Table:
    """One parsed artifact: embedded run config, header, and string cells."""

    config: dict
    columns: tuple[str, ...]
    rows: tuple[tuple[str, ...], ...]

    def floats(self, column: str) -> list[float]:
        idx = self.columns.index(column)
        return [float(r[idx]) for r in self.rows]

    def strings(self, column: str) -> list[str]:
        idx = self.columns.index(column)
        return [r[idx] for r in self.rows]


def read_table(path: "str | Path") -> Table:
    """Parse an artifact CSV; tolerate a missing config line."""
    path = Path(path)
    if not path.exists():
        raise SchemaError(f"input CSV not found: {path}")
    with path.open(newline="", encoding="utf-8") as f:
        first = f.readline()
        config: dict = {}
        if first.startswith(_CONFIG_PREFIX):
            config = json.loads(first[len(_CONFIG_PREFIX) :])
            header_line = f.readline()
        else:
            header_line = first
        if not header_line.strip():
            raise SchemaError(f"{path}: no header row")
        reader = csv.reader([header_line.rstrip("\n")] + f.read().splitlines())
        header = tuple(next(reader))
        rows = tuple(tuple(r) for r in reader if r)
    return Table(config=config, columns=header, rows=rows)


def validate(table: Table, kind: str, path: "str | Path") -> None:
    """Check the table against the kind's schema; name every missing column."""
    if kind not in REQUIRED_COLUMNS:
        raise SchemaError(f"unknown figure kind {kind!r}")
    missing = [c for c in REQUIRED_COLUMNS[kind] if c not in table.columns]
    if missing:
        raise SchemaError(
            f"{path}: missing columns for {kind}: {', '.join(missing)} "
            f"(found: {', '.join(table.columns) or 'none'})"
        )
    if not table.rows:
        raise SchemaError(f"{path}: no data rows")


def read_validated(path: "str | Path", kind: str) -> Table:
    table = read_table(path)
    validate(table, kind, path)
    return table
