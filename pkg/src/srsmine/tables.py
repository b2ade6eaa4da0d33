"""Contingency-table representation, margins, and expected null counts.

An SRS contingency table holds report counts ``n[i, j]`` for adverse event
``i`` (rows) and drug ``j`` (columns), with one designated reference column
("Other drugs") acting as the collapsed comparator category. Expected null
counts under row/column independence are ``E[i, j] = n_row[i] * n_col[j] /
n_total``.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "TableError",
    "RowWidthError",
    "CountValueError",
    "DuplicateLabelError",
    "ZeroMarginError",
    "ContingencyTable",
    "ExpectedCounts",
    "parse_table_csv",
    "table_to_csv",
    "expected_counts",
]


class TableError(ValueError):
    """Base class for contingency-table parse/validation failures."""


class RowWidthError(TableError):
    """A CSV row does not have the header's column count."""


class CountValueError(TableError):
    """A cell is not a nonnegative integer."""


class DuplicateLabelError(TableError):
    """A row or column label occurs more than once, or is empty."""


class ZeroMarginError(TableError):
    """A row or column sums to zero."""


@dataclass(frozen=True)
class ContingencyTable:
    """Validated I x J matrix of nonnegative report counts.

    ``reference_column`` marks the collapsed "Other drugs" baseline column;
    it defaults to the last column. Instances are immutable after
    construction and safe to share across threads.
    """

    counts: np.ndarray
    ae_names: tuple[str, ...]
    drug_names: tuple[str, ...]
    reference_column: int = -1

    def __post_init__(self):
        counts = np.asarray(self.counts, dtype=np.int64)
        counts.setflags(write=False)
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "ae_names", tuple(self.ae_names))
        object.__setattr__(self, "drug_names", tuple(self.drug_names))
        if counts.ndim != 2:
            raise TableError("counts must be a 2-d matrix")
        n_rows, n_cols = counts.shape
        if n_rows < 2 or n_cols < 2:
            raise TableError(f"table must be at least 2x2, got {n_rows}x{n_cols}")
        if len(self.ae_names) != n_rows:
            raise TableError("row label count does not match matrix rows")
        if len(self.drug_names) != n_cols:
            raise TableError("column label count does not match matrix columns")
        ref = self.reference_column
        if ref < 0:
            ref += n_cols
        if not 0 <= ref < n_cols:
            raise TableError(f"reference column index {self.reference_column} out of range")
        object.__setattr__(self, "reference_column", ref)
        _check_labels(self.ae_names, "row")
        _check_labels(self.drug_names, "column")
        if (counts < 0).any():
            i, j = np.argwhere(counts < 0)[0]
            raise CountValueError(
                f"negative count at row '{self.ae_names[i]}', column '{self.drug_names[j]}'"
            )
        row_tot = counts.sum(axis=1)
        col_tot = counts.sum(axis=0)
        if (row_tot == 0).any():
            i = int(np.argmax(row_tot == 0))
            raise ZeroMarginError(f"row '{self.ae_names[i]}' has zero total")
        if (col_tot == 0).any():
            j = int(np.argmax(col_tot == 0))
            raise ZeroMarginError(f"column '{self.drug_names[j]}' has zero total")

    @property
    def shape(self) -> tuple[int, int]:
        return self.counts.shape

    @property
    def row_totals(self) -> np.ndarray:
        return self.counts.sum(axis=1)

    @property
    def col_totals(self) -> np.ndarray:
        return self.counts.sum(axis=0)

    @property
    def grand_total(self) -> int:
        return int(self.counts.sum())

    def nonreference_columns(self) -> list[int]:
        """Column indices excluding the reference column, in table order."""
        return [j for j in range(self.counts.shape[1]) if j != self.reference_column]

    def with_reference_column(self, index: int) -> "ContingencyTable":
        return ContingencyTable(self.counts, self.ae_names, self.drug_names, index)


@dataclass(frozen=True)
class ExpectedCounts:
    """Expected null baseline counts with the source table's labels."""

    values: np.ndarray
    ae_names: tuple[str, ...] = field(default=())
    drug_names: tuple[str, ...] = field(default=())

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape


def _check_labels(labels, kind: str):
    seen = set()
    for lab in labels:
        if not lab:
            raise DuplicateLabelError(f"empty {kind} label")
        if lab in seen:
            raise DuplicateLabelError(f"duplicate {kind} label '{lab}'")
        seen.add(lab)


def parse_table_csv(text: str, reference_column: int = -1) -> ContingencyTable:
    """Parse a contingency table from CSV text.

    The first row is a header: an AE-label column name followed by the drug
    names. Each subsequent row is an AE label followed by integer counts.
    Raises a :class:`TableError` subclass naming the offending row or column
    on malformed input.
    """
    reader = csv.reader(io.StringIO(text))
    rows = [row for row in reader if row]
    if not rows:
        raise TableError("empty input")
    header = rows[0]
    if len(header) < 3:
        raise TableError("header must name at least two drug columns")
    drug_names = tuple(name.strip() for name in header[1:])
    width = len(header)
    ae_names = []
    counts = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != width:
            label = row[0] if row else "<blank>"
            raise RowWidthError(
                f"row '{label}' (line {lineno}) has {len(row)} fields, expected {width}"
            )
        label = row[0].strip()
        vals = []
        for colname, cell in zip(drug_names, row[1:]):
            cell = cell.strip()
            try:
                v = int(cell)
            except ValueError:
                raise CountValueError(
                    f"non-integer count '{cell}' at row '{label}', column '{colname}'"
                ) from None
            if v < 0:
                raise CountValueError(
                    f"negative count {v} at row '{label}', column '{colname}'"
                )
            vals.append(v)
        ae_names.append(label)
        counts.append(vals)
    return ContingencyTable(
        np.array(counts, dtype=np.int64), tuple(ae_names), drug_names, reference_column
    )


def table_to_csv(table: ContingencyTable, label_header: str = "Adverse Event") -> str:
    """Serialize a table back to the CSV format accepted by ``parse_table_csv``."""
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow([label_header, *table.drug_names])
    for name, row in zip(table.ae_names, table.counts):
        writer.writerow([name, *(int(v) for v in row)])
    return buf.getvalue()


def expected_counts(table: ContingencyTable) -> ExpectedCounts:
    """Expected counts under independence: E[i, j] = n_row[i] * n_col[j] / n_total."""
    row = table.row_totals.astype(np.float64)
    col = table.col_totals.astype(np.float64)
    values = np.outer(row, col) / float(table.grand_total)
    return ExpectedCounts(values, table.ae_names, table.drug_names)
