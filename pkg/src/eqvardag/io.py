"""CSV and JSON persistence."""

from __future__ import annotations

import csv
import json
import math
from pathlib import Path

import numpy as np

from .errors import InvalidInputError, ParseError
from .graph import Dag
from .sem import Dataset, SemSpec


def load_csv(path, has_header: bool = False, center: bool = False) -> Dataset:
    """Read one observation per row; cells are decimal-point floats."""
    path = Path(path)
    with path.open(newline="") as fh:
        rows = [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError(f"{path}: empty file")
    names = None
    first_line = 1
    if has_header:
        names = [c.strip() for c in rows[0]]
        rows = rows[1:]
        first_line = 2
        if not rows:
            raise ParseError(f"{path}: header but no data rows")
    width = len(names) if names is not None else len(rows[0])
    values = np.empty((len(rows), width))
    for i, row in enumerate(rows):
        if len(row) != width:
            raise ParseError(f"{path}: expected {width} fields, found {len(row)}",
                             row=i + first_line)
        for k, cell in enumerate(row):
            try:
                v = float(cell)
            except ValueError:
                raise ParseError(f"{path}: non-numeric cell {cell.strip()!r}",
                                 row=i + first_line, column=k + 1) from None
            if not math.isfinite(v):
                raise ParseError(f"{path}: non-finite cell {cell.strip()!r}",
                                 row=i + first_line, column=k + 1)
            values[i, k] = v
    data = Dataset(values, names, {"source": str(path)})
    return data.centered() if center else data


def save_csv(data: Dataset, path, header: bool = True):
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        if header:
            w.writerow(data.column_names or [f"X{j}" for j in range(data.p)])
        for row in data.values:
            w.writerow([repr(float(v)) for v in row])


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    return obj


def to_json_text(obj) -> str:
    """Deterministic JSON; floats use the shortest round-trip representation."""
    return json.dumps(_plain(obj), indent=2, allow_nan=False) + "\n"


def write_json(obj, path):
    Path(path).write_text(to_json_text(obj))


def read_json(path):
    try:
        return json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise ParseError(f"{path}: invalid JSON ({exc.msg})", row=exc.lineno,
                         column=exc.colno) from None


def load_spec(path) -> SemSpec:
    return SemSpec.from_dict(read_json(path))


def save_spec(spec: SemSpec, path, seed=None):
    write_json(spec.to_dict(seed), path)


def load_dag(path) -> Dag:
    d = read_json(path)
    if not isinstance(d, dict):
        raise InvalidInputError(f"{path}: expected a DAG object")
    return Dag.from_dict(d)
