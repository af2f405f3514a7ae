"""Count CSV: ``var1,...,varK,count``, one row per cell, absent rows are zero."""
from __future__ import annotations

import csv
import io
import math
from typing import Sequence

import numpy as np

from .errors import ParseError, SchemaError
from .table import Schema, Table


def fmt(x: float) -> str:
    """12 significant digits; ``inf``/``nan`` spelled plainly."""
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    if math.isnan(x):
        return "nan"
    return format(x, ".12g")


def parse_counts(text: str):
    """Parse count CSV text.

    Returns ``(names, levels, rows)`` where ``levels`` maps each variable to
    its labels in order of first appearance and ``rows`` is a list of
    ``(label tuple, count)``.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError("empty file", line=1) from None
    header = [h.strip() for h in header]
    if len(header) < 2 or header[-1] != "count":
        raise ParseError("header must be var1,...,varK,count", line=1)
    names = header[:-1]
    if len(set(names)) != len(names) or any(not n for n in names):
        raise ParseError("variable names must be unique and non-empty", line=1)
    levels: dict[str, list[str]] = {n: [] for n in names}
    rows = []
    seen = set()
    for lineno, row in enumerate(reader, start=2):
        if not row or all(not c.strip() for c in row):
            continue
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, got {len(row)}", line=lineno)
        labels = tuple(c.strip() for c in row[:-1])
        try:
            count = float(row[-1])
        except ValueError:
            raise ParseError(f"bad count {row[-1]!r}", line=lineno) from None
        if not math.isfinite(count) or count < 0:
            raise ParseError(f"count must be finite and non-negative, got {row[-1]!r}", line=lineno)
        if labels in seen:
            raise ParseError(f"duplicate cell {labels}", line=lineno)
        seen.add(labels)
        for n, lab in zip(names, labels):
            if lab not in levels[n]:
                levels[n].append(lab)
        rows.append((labels, count))
    if not rows:
        raise ParseError("no data rows", line=2)
    return names, levels, rows


def table_from_rows(schema: Schema, names: Sequence[str], rows) -> Table:
    if sorted(names) != sorted(schema.names):
        raise SchemaError(f"CSV columns {list(names)} do not match schema {list(schema.names)}")
    cells = np.zeros(schema.shape)
    axes = [schema.axis(n) for n in names]
    variables = [schema.variable(n) for n in names]
    for labels, count in rows:
        idx = [0] * len(axes)
        for ax, var, lab in zip(axes, variables, labels):
            idx[ax] = var.index(lab)
        cells[tuple(idx)] = count
    return Table(schema, cells)


def format_counts(t: Table) -> str:
    out = io.StringIO()
    w = csv.writer(out, lineterminator="\n")
    w.writerow([*t.names, "count"])
    for labels, value in zip(t.schema.cells(), t.flat):
        w.writerow([*labels, fmt(float(value))])
    return out.getvalue()


def read_counts(path, schema: Schema) -> Table:
    with open(path, encoding="utf-8", newline="") as fh:
        names, _, rows = parse_counts(fh.read())
    return table_from_rows(schema, names, rows)


def write_counts(path, t: Table) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(format_counts(t))
