"""Discrete fields on a mesh, their extension to morphisms, and vertex variations.

Fields are usually built from vertex "potentials": for the pair groupoid a
potential is the vertex value itself and the edge value is ``(P_u, P_v)``; for
a Lie group it is a group element and the edge value is ``P_u^{-1} P_v``.
Moving a vertex along its alpha-curve is the same as retracting its potential.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field as dc_field

import numpy as np

from .errors import BoundaryVertexError, FieldError
from .groupoid import Groupoid, LieGroupGroupoid, as_coeffs
from .jet import JetElement


@dataclass
class DiscreteField:
    """Vertex values and directed-edge values (both directions and unit loops stored)."""

    groupoid: Groupoid
    vertex_values: list
    edge_values: dict
    potentials: list | None = None

    def edge(self, u: int, v: int):
        try:
            return self.edge_values[(u, v)]
        except KeyError:
            raise FieldError(f"field has no value on edge {(u, v)}") from None

    def copy(self) -> "DiscreteField":
        return DiscreteField(
            self.groupoid,
            [np.array(x) for x in self.vertex_values],
            {e: np.array(g) for e, g in self.edge_values.items()},
            None if self.potentials is None else [np.array(p) for p in self.potentials],
        )


@dataclass(frozen=True)
class InfinitesimalVariation:
    """Per-vertex fiber coefficients; vertices in ``boundary`` carry exact zeros."""

    vectors: dict
    boundary: frozenset = frozenset()

    def __post_init__(self):
        for u in self.boundary:
            if u in self.vectors and np.any(as_coeffs(self.vectors[u])):
                raise BoundaryVertexError(f"variation is nonzero on boundary vertex {u}")

    def at(self, u: int, dim: int) -> np.ndarray:
        v = self.vectors.get(u)
        return np.zeros(dim) if v is None else as_coeffs(v)


@dataclass
class FieldViolation:
    item: str
    edge: tuple
    defect: float


@dataclass
class FieldReport:
    """Outcome of ``validate_field``. ``item`` is "1", "2", "3" or "missing"."""

    violations: list = dc_field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.violations

    @property
    def first(self) -> FieldViolation | None:
        return self.violations[0] if self.violations else None

    def items(self) -> set:
        return {v.item for v in self.violations}

    def __bool__(self):
        return self.ok


def field_from_potentials(G: Groupoid, mesh, potentials) -> DiscreteField:
    pots = [np.asarray(p, dtype=float) for p in potentials]
    if len(pots) != mesh.n_vertices:
        raise FieldError(f"expected {mesh.n_vertices} potentials, got {len(pots)}")
    verts = [G.vertex_from_potential(p) for p in pots]
    edges = {}
    for u, v in sorted(mesh.edges):
        edges[(u, v)] = G.identity(verts[u]) if u == v else G.edge_from_potentials(pots[u], pots[v])
    return DiscreteField(G, verts, edges, pots)


def constant_field(G: Groupoid, mesh, x=None) -> DiscreteField:
    """Every vertex at ``x`` and every edge the unit there (the unit potential for groups)."""
    if isinstance(G, LieGroupGroupoid):
        p = G.group.identity()
    else:
        p = np.zeros(G.base_shape) if x is None else np.asarray(x, dtype=float)
    return field_from_potentials(G, mesh, [p] * mesh.n_vertices)


def random_field(G: Groupoid, mesh, rng, scale: float = 1.0) -> DiscreteField:
    return field_from_potentials(G, mesh, [G.random_potential(rng, scale) for _ in range(mesh.n_vertices)])


def potentials_of(field: DiscreteField, mesh, root: int = 0) -> list:
    """Potentials of a field; recovered by integrating edge values from ``root`` if absent."""
    if field.potentials is not None:
        return [np.asarray(p) for p in field.potentials]
    G = field.groupoid
    if not isinstance(G, LieGroupGroupoid):
        return [np.asarray(x) for x in field.vertex_values]
    pots = [None] * mesh.n_vertices
    pots[root] = G.group.identity()
    queue = deque([root])
    while queue:
        u = queue.popleft()
        for v in mesh.neighbors[u]:
            if pots[v] is None:
                pots[v] = G.compose(pots[u], field.edge(u, v))
                queue.append(v)
    if any(p is None for p in pots):
        raise FieldError("mesh is disconnected")
    return pots


def validate_field(field: DiscreteField, mesh) -> FieldReport:
    """Check the anchor (1), inversion (2) and unit (3) axioms on every edge."""
    report = FieldReport()
    G = field.groupoid
    tol = G.tol.compose_tol
    nv = mesh.n_vertices
    if len(field.vertex_values) != nv:
        report.violations.append(FieldViolation("missing", (), float("inf")))
        return report
    for u, v in sorted(mesh.edges):
        g = field.edge_values.get((u, v))
        if g is None:
            report.violations.append(FieldViolation("missing", (u, v), float("inf")))
            continue
        try:
            d1 = max(
                G.base_distance(G.alpha(g), field.vertex_values[u]),
                G.base_distance(G.beta(g), field.vertex_values[v]),
            )
            if d1 > tol:
                report.violations.append(FieldViolation("1", (u, v), d1))
            if u == v:
                d3 = float(np.linalg.norm(np.asarray(g) - G.identity(field.vertex_values[u])))
                if d3 > tol:
                    report.violations.append(FieldViolation("3", (u, v), d3))
            else:
                back = field.edge_values.get((v, u))
                if back is not None:
                    d2 = float(np.linalg.norm(np.asarray(back) - G.inverse(g)))
                    if d2 > tol:
                        report.violations.append(FieldViolation("2", (u, v), d2))
        except Exception as exc:  # malformed payloads are reported, not raised
            report.violations.append(FieldViolation(f"error: {exc}", (u, v), float("inf")))
    return report


def shortest_path(mesh, x: int, y: int) -> list:
    """BFS vertex path from x to y with neighbours visited in id order."""
    prev = {x: None}
    queue = deque([x])
    while queue:
        u = queue.popleft()
        if u == y:
            break
        for v in mesh.neighbors[u]:
            if v not in prev:
                prev[v] = u
                queue.append(v)
    if y not in prev:
        raise FieldError(f"no path from {x} to {y}: mesh is disconnected")
    path = [y]
    while path[-1] != x:
        path.append(prev[path[-1]])
    return path[::-1]


def random_path(mesh, x: int, y: int, rng) -> list:
    """A random simple vertex path from x to y (randomized depth-first search)."""
    stack = [(x, iter(rng.permutation(mesh.neighbors[x])))]
    seen = {x}
    while stack:
        u, it = stack[-1]
        if u == y:
            return [s[0] for s in stack]
        for v in it:
            v = int(v)
            if v not in seen:
                seen.add(v)
                stack.append((v, iter(rng.permutation(mesh.neighbors[v]))))
                break
        else:
            stack.pop()
    raise FieldError(f"no path from {x} to {y}: mesh is disconnected")


def extend_to_morphism(field: DiscreteField, mesh, x: int, y: int, path=None):
    """The arrow from x to y of the morphism extending ``field``, composed along ``path``."""
    G = field.groupoid
    if path is None:
        path = shortest_path(mesh, x, y)
    path = [int(p) for p in path]
    if not path or path[0] != x or path[-1] != y:
        raise FieldError(f"path must run from {x} to {y}")
    out = G.identity(field.vertex_values[x])
    for u, v in zip(path[:-1], path[1:]):
        if (u, v) not in mesh.edges:
            raise FieldError(f"{(u, v)} is not an edge of the mesh")
        out = G.compose(out, field.edge(u, v))
    return out


def jet_of(field: DiscreteField, mesh, face: int) -> JetElement:
    """The face's jet: component i is the field on edge i = (x_{i-1}, x_i)."""
    return JetElement(field.groupoid, tuple(field.edge(u, v) for u, v in mesh.face_edges(face)))


def apply_variation(field: DiscreteField, gamma: InfinitesimalVariation, t: float, mesh=None) -> DiscreteField:
    """Edge (u,v) becomes h_u^{-1} phi(u,v) h_v and vertex w becomes beta(h_w)."""
    G = field.groupoid
    d = G.fiber_dim
    nv = len(field.vertex_values)
    curves = {}
    for u in range(nv):
        c = gamma.at(u, d)
        if u in gamma.boundary or not np.any(c) or t == 0:
            continue
        curves[u] = G.alpha_curve(field.vertex_values[u], c, t)
    verts = [G.beta(curves[u]) if u in curves else np.array(field.vertex_values[u]) for u in range(nv)]
    edges = {}
    for (u, v), g in field.edge_values.items():
        g = np.array(g)
        if u == v:
            edges[(u, v)] = G.identity(verts[u]) if u in curves else g
            continue
        if u in curves:
            g = G.compose(G.inverse(curves[u]), g)
        if v in curves:
            g = G.compose(g, curves[v])
        edges[(u, v)] = g
    pots = None
    if field.potentials is not None:
        pots = [
            G.retract(field.potentials[u], gamma.at(u, d), t) if u in curves else np.array(field.potentials[u])
            for u in range(nv)
        ]
    return DiscreteField(G, verts, edges, pots)


def face_jet_from_potentials(G: Groupoid, mesh, potentials, face: int) -> JetElement:
    """Same as ``jet_of`` for a field built from potentials, without the edge table."""
    return JetElement(
        G, tuple(G.edge_from_potentials(potentials[u], potentials[v]) for u, v in mesh.face_edges(face))
    )
