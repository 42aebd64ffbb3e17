"""CSV/JSON writers and readers for every artifact the CLI produces.

CSV layout: zero or more ``# {json}`` metadata lines, one header row, then data
rows.  Floats are written with 17 significant digits so a read gives back the
exact doubles; infinities are written as ``inf``/``-inf`` (JSON: the strings
"inf"/"-inf").
"""

from __future__ import annotations

import csv
import io
import json
import math
import os
import tempfile
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .sweep import AxisSpec, ScalarGrid

GRID_COLUMNS = ("x", "y", "value")
TRAJECTORY_COLUMNS = ("t", "segment", "x", "y", "z", "norm_drift")


class ArtifactFormatError(ValueError):
    pass


def fmt(v) -> str:
    if isinstance(v, (int, np.integer)) and not isinstance(v, bool):
        return str(int(v))
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return format(v, ".17g")


def json_number(v):
    if isinstance(v, (int, np.integer)):
        return int(v)
    v = float(v)
    if math.isinf(v):
        return "inf" if v > 0 else "-inf"
    return v


def parse_number(v) -> float:
    if isinstance(v, str):
        return float(v)  # handles "inf"/"-inf"
    return float(v)


def atomic_write(path: str | os.PathLike, text: str) -> None:
    """Write via a temp file in the target directory, then rename over."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _meta_lines(meta: dict) -> str:
    return "# " + json.dumps(meta, sort_keys=True) + "\n"


def table_to_csv(columns, rows, meta: dict | None = None) -> str:
    buf = io.StringIO()
    if meta is not None:
        buf.write(_meta_lines(meta))
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([fmt(v) if not isinstance(v, str) else v for v in row])
    return buf.getvalue()


@dataclass
class Table:
    meta: dict
    columns: list[str]
    rows: list[list[str]]

    def column(self, name: str) -> np.ndarray:
        i = self.columns.index(name)
        return np.array([float(r[i]) for r in self.rows])


def parse_csv(text: str) -> Table:
    meta = {}
    lines = text.splitlines()
    i = 0
    while i < len(lines) and lines[i].startswith("#"):
        try:
            meta.update(json.loads(lines[i][1:]))
        except json.JSONDecodeError as exc:
            raise ArtifactFormatError(f"bad metadata line {i + 1}: {exc}") from None
        i += 1
    reader = csv.reader(lines[i:])
    try:
        columns = next(reader)
    except StopIteration:
        raise ArtifactFormatError("missing header row") from None
    rows = []
    for k, row in enumerate(reader, start=i + 2):
        if len(row) != len(columns):
            raise ArtifactFormatError(f"line {k}: expected {len(columns)} fields, got {len(row)}")
        rows.append(row)
    return Table(meta, columns, rows)


def grid_meta(grid: ScalarGrid, extra: dict | None = None) -> dict:
    meta = {"quantity": grid.quantity, "layout": "row-major, y outer, x inner",
            "x_axis": grid.x_axis.to_dict(), "y_axis": grid.y_axis.to_dict()}
    meta.update({k: json_number(v) if isinstance(v, (float, int)) else v
                 for k, v in grid.meta.items()})
    if extra:
        meta.update(extra)
    return meta


def grid_to_csv(grid: ScalarGrid, extra: dict | None = None) -> str:
    x, y = grid.x_axis.values, grid.y_axis.values

    def rows():
        for iy in range(len(y)):
            for ix in range(len(x)):
                yield (x[ix], y[iy], grid.values[iy, ix])

    return table_to_csv(GRID_COLUMNS, rows(), grid_meta(grid, extra))


def grid_to_json(grid: ScalarGrid, extra: dict | None = None) -> str:
    doc = {"meta": grid_meta(grid, extra),
           "values": [json_number(v) for v in grid.flat()]}
    return json.dumps(doc, sort_keys=True) + "\n"


def _axis(d: dict) -> AxisSpec:
    return AxisSpec(d["name"], float(d["min"]), float(d["max"]), int(d["count"]))


_GRID_META_KEYS = {"quantity", "layout", "x_axis", "y_axis"}


def _grid_from(meta: dict, flat: np.ndarray) -> ScalarGrid:
    try:
        xa, ya = _axis(meta["x_axis"]), _axis(meta["y_axis"])
        quantity = meta["quantity"]
    except (KeyError, TypeError) as exc:
        raise ArtifactFormatError(f"grid metadata incomplete: {exc}") from None
    if flat.size != xa.count * ya.count:
        raise ArtifactFormatError(f"expected {xa.count * ya.count} values, got {flat.size}")
    rest = {k: v for k, v in meta.items() if k not in _GRID_META_KEYS}
    return ScalarGrid(xa, ya, flat.reshape(ya.count, xa.count), quantity, rest)


def grid_from_csv(text: str) -> ScalarGrid:
    t = parse_csv(text)
    if tuple(t.columns) != GRID_COLUMNS:
        raise ArtifactFormatError(f"grid header must be {','.join(GRID_COLUMNS)}")
    grid = _grid_from(t.meta, t.column("value"))
    xs = t.column("x").reshape(grid.values.shape)
    ys = t.column("y").reshape(grid.values.shape)
    if not (np.array_equal(xs, np.broadcast_to(grid.x_axis.values, xs.shape))
            and np.array_equal(ys, np.broadcast_to(grid.y_axis.values[:, None], ys.shape))):
        raise ArtifactFormatError("node coordinates do not match the axis metadata")
    return grid


def grid_from_json(text: str) -> ScalarGrid:
    doc = json.loads(text)
    flat = np.array([parse_number(v) for v in doc["values"]], dtype=float)
    return _grid_from(doc["meta"], flat)


def records_to_json(records: list[dict], meta: dict) -> str:
    doc = {"meta": meta,
           "records": [{k: json_number(v) if not isinstance(v, str) else v
                        for k, v in r.items()} for r in records]}
    return json.dumps(doc, sort_keys=True) + "\n"


def records_to_csv(records: list[dict], columns, meta: dict) -> str:
    return table_to_csv(columns, ([r[c] for c in columns] for r in records), meta)


def read_records(path: str | os.PathLike) -> tuple[dict, list[dict]]:
    """Generic reader: returns (meta, list of {column: float}) for any artifact."""
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        doc = json.loads(text)
        meta = doc.get("meta", {})
        if "records" in doc:
            recs = [{k: parse_number(v) for k, v in r.items()} for r in doc["records"]]
        elif "values" in doc:
            g = grid_from_json(text)
            recs = _grid_records(g)
        else:
            raise ArtifactFormatError("JSON artifact has neither records nor values")
        return meta, recs
    t = parse_csv(text)
    if tuple(t.columns) == GRID_COLUMNS:
        grid_from_csv(text)
    try:
        recs = [{c: float(v) for c, v in zip(t.columns, row)} for row in t.rows]
    except ValueError as exc:
        raise ArtifactFormatError(str(exc)) from None
    return t.meta, recs


def _grid_records(g: ScalarGrid) -> list[dict]:
    x, y = g.x_axis.values, g.y_axis.values
    return [{"x": float(x[ix]), "y": float(y[iy]), "value": float(g.values[iy, ix])}
            for iy in range(len(y)) for ix in range(len(x))]


def read_grid(path: str | os.PathLike) -> ScalarGrid:
    text = Path(path).read_text()
    if text.lstrip().startswith("{"):
        return grid_from_json(text)
    return grid_from_csv(text)
