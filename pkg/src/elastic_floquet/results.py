"""Result tables and their CSV / JSON persistence."""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

COLUMN_TYPES = ("real", "complex", "int", "str")


def fmt_real(x) -> str:
    """Shortest-safe lossless decimal: 17 significant digits."""
    return format(float(x), ".17g")


@dataclass
class ResultTable:
    """Named, typed columns; complex columns are written as ``name_re, name_im``."""

    columns: list                      # [(name, type), ...]
    rows: list = field(default_factory=list)
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, kind in self.columns:
            if kind not in COLUMN_TYPES:
                raise ValueError(f"column {name!r} has unknown type {kind!r}")

    def append(self, row):
        row = tuple(row)
        if len(row) != len(self.columns):
            raise ValueError(f"row has {len(row)} values, schema has {len(self.columns)}")
        self.rows.append(row)

    def sort(self, key_index: int = 0):
        self.rows.sort(key=lambda r: r[key_index])

    @property
    def header(self):
        out = []
        for name, kind in self.columns:
            out += [f"{name}_re", f"{name}_im"] if kind == "complex" else [name]
        return out

    def _cells(self, row):
        out = []
        for (name, kind), v in zip(self.columns, row):
            if kind == "complex":
                v = complex(v)
                out += [fmt_real(v.real), fmt_real(v.imag)]
            elif kind == "real":
                out.append(fmt_real(v))
            elif kind == "int":
                out.append(str(int(v)))
            else:
                out.append(str(v))
        return out

    def to_csv(self) -> str:
        buf = io.StringIO()
        for key in sorted(self.metadata):
            buf.write(f"# {key}: {self.metadata[key]}\n")
        w = csv.writer(buf, lineterminator="\n", quoting=csv.QUOTE_MINIMAL)
        w.writerow(self.header)
        for row in self.rows:
            w.writerow(self._cells(row))
        return buf.getvalue()

    def to_dict(self) -> dict:
        return {"metadata": self.metadata, "columns": [list(c) for c in self.columns],
                "header": self.header, "rows": [self._cells(r) for r in self.rows]}


def write_results(table: ResultTable, path, fmt: str = "csv") -> Path:
    """Write a table as CSV or JSON; IO errors are re-raised with the path."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        if fmt == "csv":
            path.write_text(table.to_csv())
        elif fmt == "json":
            path.write_text(json.dumps(table.to_dict(), indent=2, sort_keys=True) + "\n")
        else:
            raise ValueError(f"unknown format {fmt!r}")
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path):
    """Read a CSV written by :func:`write_results`.

    Returns
    -------
    metadata : dict
    header : list of str
    values : ndarray of float, shape (rows, columns)
    """
    meta, lines = {}, []
    for line in Path(path).read_text().splitlines():
        if line.startswith("# "):
            key, _, value = line[2:].partition(": ")
            meta[key] = value
        else:
            lines.append(line)
    reader = csv.reader(lines)
    header = next(reader)
    rows = [[float(v) for v in r] for r in reader]
    return meta, header, np.array(rows, dtype=float).reshape(len(rows), len(header))


def write_document(doc: dict, path) -> Path:
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        path.write_text(json.dumps(doc, indent=2, sort_keys=True, default=_jsonable) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write document to {path}: {exc}") from exc
    return path


def _jsonable(v):
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"not serialisable: {type(v)}")
