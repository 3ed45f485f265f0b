"""Lattice gauge fields: plaquette field strength, holonomy, flatness and homotopy moves."""

from __future__ import annotations

from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import FieldError, NotComposable
from .groupoid import LieGroupGroupoid


@dataclass
class GaugeField:
    """Group elements on directed edges with psi(v, u) = psi(u, v)^{-1}."""

    groupoid: LieGroupGroupoid
    edge_values: dict

    def __getitem__(self, edge):
        try:
            return self.edge_values[tuple(edge)]
        except KeyError:
            raise FieldError(f"gauge field has no value on edge {tuple(edge)}") from None

    def inversion_defect(self) -> float:
        G = self.groupoid
        worst = 0.0
        for (u, v), g in self.edge_values.items():
            back = self.edge_values.get((v, u))
            if back is not None:
                worst = max(worst, float(np.linalg.norm(np.asarray(back) @ np.asarray(g) - G.group.identity())))
        return worst


@dataclass(frozen=True)
class PathInComplex:
    """A vertex sequence; consecutive vertices must be joined by mesh edges."""

    vertices: tuple

    @property
    def edges(self) -> list:
        return list(zip(self.vertices[:-1], self.vertices[1:]))

    def __add__(self, other: "PathInComplex") -> "PathInComplex":
        if self.vertices[-1] != other.vertices[0]:
            raise NotComposable("paths do not meet")
        return PathInComplex(self.vertices + other.vertices[1:])

    def reversed(self) -> "PathInComplex":
        return PathInComplex(self.vertices[::-1])


@dataclass
class FlatnessReport:
    flat: bool
    worst: float
    defects: list = dc_field(default_factory=list)

    def defective_faces(self, tol: float) -> list:
        return [f for f, d in enumerate(self.defects) if d >= tol]


def make_gauge_field(G: LieGroupGroupoid, mesh, values: dict) -> GaugeField:
    """Fill in reverse edges and unit loops from values given on one orientation."""
    out = {}
    for (u, v), g in values.items():
        g = np.asarray(g, dtype=float)
        out[(u, v)] = g
        if (v, u) not in values:
            out[(v, u)] = G.inverse(g)
    for u in range(mesh.n_vertices):
        out.setdefault((u, u), G.group.identity())
    missing = [e for e in mesh.edges if e not in out]
    if missing:
        raise FieldError(f"gauge field misses edges, e.g. {sorted(missing)[0]}")
    return GaugeField(G, out)


def gauge_from_field(field, mesh) -> GaugeField:
    G = field.groupoid
    if not isinstance(G, LieGroupGroupoid):
        raise TypeError("gauge fields take values in a Lie group realization")
    return GaugeField(G, {e: np.array(field.edge(*e)) for e in sorted(mesh.edges)})


def random_gauge_field(G: LieGroupGroupoid, mesh, rng, scale: float = 1.0) -> GaugeField:
    values = {(u, v): G.random_element(rng, scale) for u, v in sorted(mesh.edges) if u < v}
    return make_gauge_field(G, mesh, values)


def field_strength(psi: GaugeField, mesh, face: int):
    """Ordered product of psi over the face's counterclockwise edge cycle."""
    G = psi.groupoid
    out = G.group.identity()
    for e in mesh.face_edges(face):
        out = G.compose(out, psi[e])
    return out


def holonomy(psi: GaugeField, path, mesh=None):
    """Ordered product of psi along a path (vertex sequence or ``PathInComplex``)."""
    if not isinstance(path, PathInComplex):
        path = PathInComplex(tuple(int(v) for v in path))
    G = psi.groupoid
    out = G.group.identity()
    for e in path.edges:
        if mesh is not None and e not in mesh.edges:
            raise NotComposable(f"{e} is not an edge of the mesh")
        out = G.compose(out, psi[e])
    return out


def plaquette_defects(psi: GaugeField, mesh) -> list:
    eye = psi.groupoid.group.identity()
    return [float(np.linalg.norm(field_strength(psi, mesh, f) - eye)) for f in range(mesh.n_faces)]


def is_flat(psi: GaugeField, mesh, tol: float | None = None) -> FlatnessReport:
    tol = psi.groupoid.tol.cycle_tol if tol is None else tol
    defects = plaquette_defects(psi, mesh)
    worst = max(defects, default=0.0)
    return FlatnessReport(worst < tol, worst, defects)


def perturb_edge(psi: GaugeField, edge, coeffs) -> GaugeField:
    """Right-multiply psi on ``edge`` by exp(coeffs) and update the reverse edge."""
    G = psi.groupoid
    u, v = edge
    values = dict(psi.edge_values)
    g = G.compose(psi[(u, v)], G.exp(coeffs))
    values[(u, v)] = g
    values[(v, u)] = G.inverse(g)
    return GaugeField(G, values)


def elementary_moves(mesh, path) -> list:
    """All paths obtained by swapping one arc of a face boundary for the complementary arc.

    Arcs of length 1..k-1 are matched along either orientation of each face.
    """
    verts = tuple(path.vertices if isinstance(path, PathInComplex) else path)
    k = mesh.k
    out = []
    seen = set()
    for f in range(mesh.n_faces):
        c = mesh.corners(f)
        for cycle in (c, c[::-1]):
            for s in range(k):
                for m in range(1, k):
                    arc = tuple(cycle[(s + r) % k] for r in range(m + 1))
                    comp = tuple(cycle[(s - r) % k] for r in range(k - m + 1))
                    for p in range(len(verts) - m):
                        if verts[p:p + m + 1] == arc:
                            new = verts[:p] + comp + verts[p + m + 1:]
                            if new not in seen:
                                seen.add(new)
                                out.append(PathInComplex(new))
    return out
