"""Loading of the simulation toolkit's CSV/JSON artifacts.

Every loader raises :class:`InputError` naming the offending file (and row,
for tabular data) - a renderer fed a truncated or hand-edited CSV should
say exactly where it choked.
"""

from __future__ import annotations

import csv
import json
import os


class InputError(ValueError):
    """Missing, truncated, or unparseable input artifact."""


def load_report(report_dir):
    """Parse ``report.json`` from a preset artifact directory."""
    path = os.path.join(report_dir, "report.json")
    if not os.path.exists(path):
        raise InputError(f"{path}: not found (is this a preset output directory?)")
    try:
        with open(path, encoding="utf-8") as fh:
            doc = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InputError(f"{path}: invalid JSON: {exc}") from exc
    for key in ("preset", "reports", "artifacts"):
        if key not in doc:
            raise InputError(f"{path}: missing key {key!r}")
    return doc


def load_table(path):
    """Read one toolkit CSV into {column: list}; numeric columns become floats.

    Raises InputError with the file name and 1-based row number on any
    malformed cell, and on missing files or empty tables.
    """
    if not os.path.exists(path):
        raise InputError(f"{path}: not found")
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise InputError(f"{path}: empty file") from None
        columns = {name: [] for name in header}
        for i, row in enumerate(reader, start=2):
            if len(row) != len(header):
                raise InputError(
                    f"{path}: row {i}: expected {len(header)} cells, got {len(row)}")
            for name, cell in zip(header, row):
                if name == "method":
                    columns[name].append(cell)
                    continue
                try:
                    columns[name].append(float(cell))
                except ValueError:
                    raise InputError(
                        f"{path}: row {i}: cannot parse {cell!r} in column "
                        f"{name!r}") from None
    if not columns[header[0]]:
        raise InputError(f"{path}: no data rows")
    return columns


def branch_labels(columns):
    """Branch labels inferred from the population/eigenvalue column names."""
    labels = [name[2:] for name in columns if name.startswith("p_")]
    if not labels:
        labels = [name[len("re_lambda_"):] for name in columns
                  if name.startswith("re_lambda_")]
    return labels
