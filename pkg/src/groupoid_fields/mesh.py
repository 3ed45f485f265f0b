"""Planar meshes with constant face degree and counterclockwise faces.

Index convention used throughout the package: a face stores its corners
``(x_1, ..., x_k)`` counterclockwise, and its ``i``-th edge (``i = 1..k``) is
``(x_{i-1}, x_i)`` with indices taken modulo ``k`` in ``1..k``; so edge 1 is
``(x_k, x_1)``. The source vertex of edge ``i`` is ``x_{i-1}``, and that is the
vertex whose value is moved by the ``i``-th tangent lift.

Generated grids store every face so that its edge 1 starts at the lower-left
"anchor" corner of the grid cell. For the square mesh the sources of edges
1..4 are then bottom-left, bottom-right, top-right, top-left.
"""

from __future__ import annotations

import math
from collections import deque
from dataclasses import dataclass, field

import numpy as np

from .errors import DimensionTooSmall, MeshError


def signed_area(points) -> float:
    p = np.asarray(points, dtype=float)
    x, y = p[:, 0], p[:, 1]
    return 0.5 * float(np.sum(x * np.roll(y, -1) - np.roll(x, -1) * y))


def _canonical_cycle(cycle):
    i = min(range(len(cycle)), key=lambda j: cycle[j])
    return tuple(cycle[i:]) + tuple(cycle[:i])


@dataclass
class MeshTopology:
    """Vertices, directed edges (with unit loops), and oriented k-gon faces.

    ``extra_edges`` are undirected edges that belong to the planar graph but to
    no declared face (the triangular grid has such edges on its top row and
    left column). Derived data is computed once in ``__post_init__``; the mesh
    is treated as immutable afterwards.
    """

    positions: np.ndarray
    faces: tuple
    kind: str = "generic"
    shape: tuple | None = None
    spacing: tuple | None = None
    extra_edges: tuple = ()
    validate: bool = True

    edges: frozenset = field(init=False, repr=False)
    k: int = field(init=False)

    def __post_init__(self):
        self.positions = np.asarray(self.positions, dtype=float).reshape(-1, 2)
        self.faces = tuple(tuple(int(v) for v in f) for f in self.faces)
        self.extra_edges = tuple(tuple(int(v) for v in e) for e in self.extra_edges)
        nv = len(self.positions)
        if not self.faces:
            raise MeshError("mesh has no faces")
        degrees = {len(f) for f in self.faces}
        if len(degrees) != 1:
            raise MeshError(f"face degree is not constant: {sorted(degrees)}")
        self.k = degrees.pop()
        if self.k < 3:
            raise MeshError("face degree must be larger than two")
        for f in self.faces:
            if any(v < 0 or v >= nv for v in f):
                raise MeshError(f"face {f} references an unknown vertex")
            if len(set(f)) != len(f):
                raise MeshError(f"face {f} repeats a vertex")

        undirected = set()
        self._traversal = {}
        for fid, f in enumerate(self.faces):
            for i in range(1, self.k + 1):
                e = self.edge_of_face(fid, i)
                if e in self._traversal:
                    raise MeshError(f"directed edge {e} is traversed by two faces in the same direction")
                self._traversal[e] = (fid, i)
                undirected.add(frozenset(e))
        for u, v in self.extra_edges:
            if u == v or not (0 <= u < nv and 0 <= v < nv):
                raise MeshError(f"invalid extra edge {(u, v)}")
            undirected.add(frozenset((u, v)))

        nbrs = [set() for _ in range(nv)]
        for e in undirected:
            u, v = tuple(e)
            nbrs[u].add(v)
            nbrs[v].add(u)
        self.neighbors = tuple(tuple(sorted(s)) for s in nbrs)
        directed = {(u, u) for u in range(nv)}
        for u in range(nv):
            for v in self.neighbors[u]:
                directed.add((u, v))
        self.edges = frozenset(directed)

        incident = [[] for _ in range(nv)]
        for fid, f in enumerate(self.faces):
            for i in range(1, self.k + 1):
                incident[f[(i - 2) % self.k]].append((fid, i))
        self._incident = tuple(tuple(sorted(lst)) for lst in incident)

        self._outer = self._outer_vertices()
        if self.validate:
            self.check()

    # -- basic accessors -------------------------------------------------

    @property
    def n_vertices(self) -> int:
        return len(self.positions)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    def corners(self, face: int) -> tuple:
        self._check_face(face)
        return self.faces[face]

    def edge_of_face(self, face: int, i: int) -> tuple:
        """The ``i``-th edge ``(x_{i-1}, x_i)`` of a face, ``i`` in ``1..k``."""
        f = self.faces[face]
        k = len(f)
        if not 1 <= i <= k:
            raise MeshError(f"edge index {i} out of range 1..{k}")
        return (f[(i - 2) % k], f[(i - 1) % k])

    def face_edges(self, face: int) -> list:
        return [self.edge_of_face(face, i) for i in range(1, self.k + 1)]

    def source_vertex(self, face: int, i: int) -> int:
        return self.edge_of_face(face, i)[0]

    def face_traversing(self, edge) -> tuple | None:
        """(face id, local index) of the face traversing ``edge`` in that direction."""
        return self._traversal.get(tuple(edge))

    def faces_at_vertex(self, u: int) -> list:
        """All ``(face id, i)`` with ``u`` the source of edge ``i`` of the face."""
        self._check_vertex(u)
        return list(self._incident[u])

    def degree(self, u: int) -> int:
        self._check_vertex(u)
        return len(self.neighbors[u])

    def is_boundary(self, u: int) -> bool:
        """True when ``u`` lies on the outer face of the planar embedding."""
        self._check_vertex(u)
        return u in self._outer

    @property
    def boundary_vertices(self) -> frozenset:
        return self._outer

    def interior_vertices(self) -> list:
        return [u for u in range(self.n_vertices) if u not in self._outer]

    def vertex_at(self, i: int, j: int) -> int:
        """Vertex id at grid position ``(i, j)`` on generated grids (row-major)."""
        if self.shape is None:
            raise MeshError("vertex_at is only defined for generated grid meshes")
        nx, ny = self.shape
        if not (0 <= i < nx and 0 <= j < ny):
            raise MeshError(f"grid index {(i, j)} out of range")
        return j * nx + i

    def grid_coords(self, u: int) -> tuple:
        if self.shape is None:
            raise MeshError("grid_coords is only defined for generated grid meshes")
        nx, _ = self.shape
        return (u % nx, u // nx)

    def _check_vertex(self, u):
        if not (isinstance(u, (int, np.integer)) and 0 <= u < self.n_vertices):
            raise MeshError(f"unknown vertex {u!r}")

    def _check_face(self, f):
        if not (isinstance(f, (int, np.integer)) and 0 <= f < self.n_faces):
            raise MeshError(f"unknown face {f!r}")

    # -- boundary --------------------------------------------------------

    def boundary_of(self, region) -> set:
        """Edges of region faces whose opposite-traversing face is outside the region or absent."""
        region = set(region)
        for f in region:
            self._check_face(f)
        out = set()
        for f in region:
            for e in self.face_edges(f):
                opp = self._traversal.get((e[1], e[0]))
                if opp is None or opp[0] not in region:
                    out.add(e)
        return out

    # -- embedding -------------------------------------------------------

    def _rotation_system(self):
        order = []
        for u in range(self.n_vertices):
            pu = self.positions[u]
            nb = sorted(
                self.neighbors[u],
                key=lambda v: math.atan2(self.positions[v][1] - pu[1], self.positions[v][0] - pu[0]),
            )
            order.append(nb)
        return order

    def embedded_faces(self) -> list:
        """Trace all faces of the straight-line embedding as vertex cycles."""
        order = self._rotation_system()
        pos_in = [{v: idx for idx, v in enumerate(nb)} for nb in order]
        seen = set()
        cycles = []
        for u in range(self.n_vertices):
            for v in order[u]:
                if (u, v) in seen:
                    continue
                cycle = []
                a, b = u, v
                while (a, b) not in seen:
                    seen.add((a, b))
                    cycle.append(a)
                    nb = order[b]
                    c = nb[(pos_in[b][a] - 1) % len(nb)]
                    a, b = b, c
                cycles.append(cycle)
        return cycles

    def _outer_vertices(self) -> frozenset:
        cycles = self.embedded_faces()
        if not cycles:
            return frozenset(range(self.n_vertices))
        outer = set()
        for c in cycles:
            if signed_area(self.positions[c]) <= 0:
                outer.update(c)
        return frozenset(outer)

    # -- validation ------------------------------------------------------

    def check(self):
        """Validate the mesh axioms; raise MeshError on the first failure."""
        nv = self.n_vertices
        for fid, f in enumerate(self.faces):
            if signed_area(self.positions[list(f)]) <= 0:
                raise MeshError(f"face {fid} is not counterclockwise")
        for u, v in self.edges:
            if (v, u) not in self.edges:
                raise MeshError(f"edge {(u, v)} has no reverse")
        for u in range(nv):
            if (u, u) not in self.edges:
                raise MeshError(f"missing unit loop at {u}")
            if not self.neighbors[u]:
                raise MeshError(f"vertex {u} is isolated")
        # connectivity
        seen = {0}
        queue = deque([0])
        while queue:
            u = queue.popleft()
            for v in self.neighbors[u]:
                if v not in seen:
                    seen.add(v)
                    queue.append(v)
        if len(seen) != nv:
            raise MeshError("mesh is not connected")
        self._check_planar()
        traced = {_canonical_cycle(c) for c in self.embedded_faces()}
        for fid, f in enumerate(self.faces):
            if _canonical_cycle(f) not in traced:
                raise MeshError(f"face {fid} is not a face of the planar embedding (edges inside it?)")
        for u in self.interior_vertices():
            if self.degree(u) <= 2:
                raise MeshError(f"interior vertex {u} has degree {self.degree(u)} <= 2")

    def _check_planar(self):
        segs = sorted({tuple(sorted(e)) for e in self.edges if e[0] != e[1]})
        P = self.positions
        if len(segs) > 4000:
            return  # quadratic check skipped for large meshes
        for a in range(len(segs)):
            u1, v1 = segs[a]
            for b in range(a + 1, len(segs)):
                u2, v2 = segs[b]
                if len({u1, v1, u2, v2}) < 4:
                    continue
                if _segments_intersect(P[u1], P[v1], P[u2], P[v2]):
                    raise MeshError(f"edges {segs[a]} and {segs[b]} cross")

    def to_dict(self) -> dict:
        d = {
            "k": self.k,
            "vertices": self.positions.tolist(),
            "faces": [list(f) for f in self.faces],
        }
        if self.kind != "generic":
            d["kind"] = self.kind
            d["shape"] = list(self.shape)
            d["spacing"] = list(self.spacing)
        return d


def _segments_intersect(p1, p2, p3, p4) -> bool:
    def orient(a, b, c):
        return (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])

    d1, d2 = orient(p3, p4, p1), orient(p3, p4, p2)
    d3, d4 = orient(p1, p2, p3), orient(p1, p2, p4)
    return (d1 * d2 < 0) and (d3 * d4 < 0)


def _grid_positions(nx, ny, dx, dy):
    return np.array([[i * dx, j * dy] for j in range(ny) for i in range(nx)], dtype=float)


def build_square_mesh(nx: int, ny: int, dx: float = 1.0, dy: float = 1.0) -> MeshTopology:
    """Quadrilateral grid with ``nx * ny`` vertices and row-major face ids."""
    if nx < 2 or ny < 2:
        raise DimensionTooSmall(f"square mesh needs nx, ny >= 2, got {(nx, ny)}")
    if dx <= 0 or dy <= 0:
        raise MeshError("grid spacings must be positive")
    vid = lambda i, j: j * nx + i  # noqa: E731
    faces = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            bl, br, tr, tl = vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)
            faces.append((br, tr, tl, bl))
    return MeshTopology(
        _grid_positions(nx, ny, dx, dy), tuple(faces), kind="square", shape=(nx, ny), spacing=(dx, dy)
    )


def build_triangular_mesh(nx: int, ny: int, dx: float = 1.0, dy: float = 1.0) -> MeshTopology:
    """Grid with triangle faces ``((i,j), (i+1,j), (i+1,j+1))`` only.

    The upper-left triangles of each cell are not faces. Horizontal edges of
    the top row and vertical edges of the left column belong to no face and
    are kept as extra edges so that the graph carries all grid edges.
    """
    if nx < 2 or ny < 2:
        raise DimensionTooSmall(f"triangular mesh needs nx, ny >= 2, got {(nx, ny)}")
    vid = lambda i, j: j * nx + i  # noqa: E731
    faces = []
    for j in range(ny - 1):
        for i in range(nx - 1):
            faces.append((vid(i + 1, j), vid(i + 1, j + 1), vid(i, j)))
    extra = [(vid(i, ny - 1), vid(i + 1, ny - 1)) for i in range(nx - 1)]
    extra += [(vid(0, j), vid(0, j + 1)) for j in range(ny - 1)]
    return MeshTopology(
        _grid_positions(nx, ny, dx, dy),
        tuple(faces),
        kind="triangular",
        shape=(nx, ny),
        spacing=(dx, dy),
        extra_edges=tuple(extra),
    )


def mesh_from_dict(data: dict) -> MeshTopology:
    """Rebuild a mesh from its JSON form and revalidate it."""
    try:
        k = int(data["k"])
        vertices = np.asarray(data["vertices"], dtype=float)
        faces = [tuple(int(v) for v in f) for f in data["faces"]]
    except (KeyError, TypeError, ValueError) as exc:
        raise MeshError(f"malformed mesh data: {exc}") from exc
    kind = data.get("kind", "generic")
    if kind in ("square", "triangular"):
        nx, ny = (int(s) for s in data["shape"])
        dx, dy = (float(s) for s in data.get("spacing", (1.0, 1.0)))
        builder = build_square_mesh if kind == "square" else build_triangular_mesh
        mesh = builder(nx, ny, dx, dy)
        if mesh.k != k or [tuple(f) for f in mesh.faces] != faces or not np.allclose(mesh.positions, vertices):
            raise MeshError(f"{kind} mesh data does not match the generated grid")
        return mesh
    mesh = MeshTopology(vertices, tuple(faces))
    if mesh.k != k:
        raise MeshError(f"declared k={k} but faces have degree {mesh.k}")
    return mesh
