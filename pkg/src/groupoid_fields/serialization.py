"""JSON, CSV and NPZ readers and writers for meshes, fields and gauge fields.

Floats in CSV files are written with ``%.17g`` so identical runs give
byte-identical files.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FieldError
from .field import DiscreteField
from .gauge import GaugeField
from .groupoid import EuclideanSpace, PairGroupoid, parse_groupoid
from .mesh import mesh_from_dict


def fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "%.17g" % float(x)
    return str(x)


def write_csv(path, header, rows) -> Path:
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(x) for x in row])
    return path


def read_csv(path) -> tuple:
    with Path(path).open(newline="") as fh:
        rows = list(csv.reader(fh))
    return rows[0], rows[1:]


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True) + "\n")
    return path


def read_json(path):
    return json.loads(Path(path).read_text())


# -- meshes ----------------------------------------------------------------


def save_mesh(mesh, path) -> Path:
    return write_json(path, mesh.to_dict())


def load_mesh(path):
    return mesh_from_dict(read_json(path))


# -- fields ----------------------------------------------------------------


def field_to_dict(field: DiscreteField) -> dict:
    G = field.groupoid
    return {
        "groupoid": G.spec,
        "vertices": [np.asarray(x).reshape(-1) for x in field.vertex_values],
        "edges": [[u, v, G.flatten(g)] for (u, v), g in sorted(field.edge_values.items())],
        "potentials": None if field.potentials is None else [np.asarray(p).reshape(-1) for p in field.potentials],
    }


def field_from_dict(data: dict) -> DiscreteField:
    G = parse_groupoid(data["groupoid"])
    verts = [np.asarray(x, dtype=float).reshape(G.base_shape) for x in data["vertices"]]
    edges = {(int(u), int(v)): G.unflatten(vals) for u, v, vals in data["edges"]}
    pots = data.get("potentials")
    if pots is not None:
        shape = G.element_shape[1:] if isinstance(G, PairGroupoid) else G.element_shape
        pots = [np.asarray(p, dtype=float).reshape(shape) for p in pots]
    return DiscreteField(G, verts, edges, pots)


def save_field_json(field: DiscreteField, path) -> Path:
    return write_json(path, field_to_dict(field))


def load_field_json(path) -> DiscreteField:
    return field_from_dict(read_json(path))


def save_field_csv(field: DiscreteField, path) -> Path:
    """One row per vertex (``kind=vertex``) and per directed edge (``kind=edge``)."""
    G = field.groupoid
    width = int(np.prod(G.element_shape))
    rows = []
    for u, x in enumerate(field.vertex_values):
        vals = list(np.asarray(x).reshape(-1))
        rows.append(["vertex", u, u] + vals + [""] * (width - len(vals)))
    for (u, v), g in sorted(field.edge_values.items()):
        rows.append(["edge", u, v] + list(G.flatten(g)))
    return write_csv(path, ["kind", "u", "v"] + [f"c{n}" for n in range(width)], rows)


def field_grid(field: DiscreteField, mesh, component: int = 0) -> np.ndarray:
    """Vertex values of a pair-groupoid field over R^n as an (ny, nx) array."""
    G = field.groupoid
    if not (isinstance(G, PairGroupoid) and isinstance(G.manifold, EuclideanSpace)):
        raise FieldError("grid export needs a pair-groupoid field over R^n")
    if mesh.shape is None:
        raise FieldError("grid export needs a generated grid mesh")
    nx, ny = mesh.shape
    return np.array([[field.vertex_values[mesh.vertex_at(i, j)][component] for i in range(nx)] for j in range(ny)])


def save_field_grid_csv(field: DiscreteField, mesh, path, component: int = 0) -> Path:
    grid = field_grid(field, mesh, component)
    path = Path(path)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        for row in grid:
            w.writerow([fmt(x) for x in row])
    return path


# -- gauge fields ----------------------------------------------------------


def save_gauge(psi: GaugeField, path) -> Path:
    edges = sorted(psi.edge_values)
    np.savez(
        path,
        groupoid=np.array(psi.groupoid.spec),
        edges=np.array(edges, dtype=int).reshape(-1, 2),
        values=np.stack([psi.edge_values[e] for e in edges]),
    )
    return Path(path)


def load_gauge(path) -> GaugeField:
    with np.load(path) as data:
        G = parse_groupoid(str(data["groupoid"]))
        values = {(int(u), int(v)): np.array(g) for (u, v), g in zip(data["edges"], data["values"])}
    return GaugeField(G, values)


def save_flatness_csv(report, path) -> Path:
    return write_csv(path, ["face", "defect"], list(enumerate(report.defects)))
