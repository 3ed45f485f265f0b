"""Euler-Lagrange residuals, Newton solvers, multisymplecticity and reduction checks.

The unknowns of every solve are vertex potentials (see ``field``). A Newton step
moves potential ``P_u`` to ``retract(P_u, xi_u)``, which is the same as moving
vertex ``u`` along its alpha-curve, so the Jacobian columns are tangent-lift
derivatives of the residual.
"""

from __future__ import annotations

import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field as dc_field

import numpy as np
import scipy.linalg

from .errors import (
    BoundaryVertexError,
    DegenerateLegendre,
    MeshError,
    NonConvergence,
    NotASolution,
    NotInvariant,
    SingularJacobian,
)
from .field import (
    DiscreteField,
    InfinitesimalVariation,
    face_jet_from_potentials,
    field_from_potentials,
    jet_of,
    potentials_of,
)
from .groupoid import (
    AlgebroidCovector,
    EuclideanSpace,
    Groupoid,
    LieGroupGroupoid,
    PairGroupoid,
    as_coeffs,
)
from .jet import JetElement, jet_from_sources
from .lagrangian import Lagrangian, action_sum, pc_form

JAC_H = 1e-6
MAX_ITER = 50
MAX_HALVINGS = 30
PIVOT_TOL = 1e-12


def default_newton_tol(G: Groupoid) -> float:
    if isinstance(G, PairGroupoid) and isinstance(G.manifold, EuclideanSpace):
        return 1e-10
    return 1e-8


@dataclass
class VertexResidual:
    vertex: int
    covector: AlgebroidCovector

    @property
    def norm(self) -> float:
        return float(np.linalg.norm(self.covector.coeffs))


@dataclass
class SolveReport:
    iterations: int = 0
    residual_norm: float = float("nan")
    converged: bool = False
    wall_time: float = 0.0
    history: list = dc_field(default_factory=list)
    n_unknowns: int = 0
    message: str = ""

    def to_dict(self) -> dict:
        return {
            "iterations": self.iterations,
            "residual_norm": self.residual_norm,
            "converged": self.converged,
            "wall_time": self.wall_time,
            "n_unknowns": self.n_unknowns,
            "message": self.message,
        }


@dataclass
class MarchReport:
    rows_computed: int = 0
    steps: list = dc_field(default_factory=list)
    row_actions: list = dc_field(default_factory=list)
    wall_time: float = 0.0

    @property
    def residual_norm(self) -> float:
        return max((s.residual_norm for s in self.steps), default=0.0)

    @property
    def converged(self) -> bool:
        return all(s.converged for s in self.steps)

    @property
    def history(self) -> list:
        out = []
        for j, s in enumerate(self.steps, start=1):
            out.extend((j,) + tuple(h) for h in s.history)
        return out


# ---------------------------------------------------------------------------
# Residual assembly


class EulerLagrangeOperator:
    """L bound to a mesh; evaluates vertex residuals from a list of potentials.

    With ``region`` given, only faces in the region contribute.
    """

    def __init__(self, L: Lagrangian, mesh, groupoid: Groupoid, region=None, workers: int = 1):
        if mesh.k != L.k:
            raise MeshError(f"mesh has face degree {mesh.k}, Lagrangian expects {L.k}")
        self.L = L
        self.mesh = mesh
        self.G = groupoid
        self.region = None if region is None else frozenset(region)
        self.workers = max(1, int(workers))

    def incident(self, u: int) -> list:
        pairs = self.mesh.faces_at_vertex(u)
        if self.region is None:
            return pairs
        return [(f, i) for f, i in pairs if f in self.region]

    def vertex_residual(self, potentials, u: int) -> np.ndarray:
        out = np.zeros(self.G.fiber_dim)
        for f, i in self.incident(u):
            jet = face_jet_from_potentials(self.G, self.mesh, potentials, f)
            out += pc_form(self.L, jet, i).covector.coeffs
        return out

    def residuals(self, potentials, vertices) -> np.ndarray:
        vertices = list(vertices)
        if not vertices:
            return np.zeros((0, self.G.fiber_dim))
        if self.workers > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as pool:
                rows = list(pool.map(lambda u: self.vertex_residual(potentials, u), vertices))
        else:
            rows = [self.vertex_residual(potentials, u) for u in vertices]
        return np.stack(rows)

    def __call__(self, field: DiscreteField, u: int) -> VertexResidual:
        return residual_at(self.L, field, self.mesh, u)


def residual_at(L: Lagrangian, field: DiscreteField, mesh, u: int) -> VertexResidual:
    """Sum of the Poincare-Cartan forms of all incident faces at an interior vertex."""
    if mesh.is_boundary(u):
        raise BoundaryVertexError(f"vertex {u} is on the mesh boundary")
    G = field.groupoid
    out = np.zeros(G.fiber_dim)
    for f, i in mesh.faces_at_vertex(u):
        out += pc_form(L, jet_of(field, mesh, f), i).covector.coeffs
    return VertexResidual(u, G.covector(field.vertex_values[u], out))


def residual_norm(L: Lagrangian, field: DiscreteField, mesh, vertices=None) -> float:
    """Sup over vertices of the coefficient norm of the residual (0 with no vertices)."""
    vertices = mesh.interior_vertices() if vertices is None else vertices
    return max((residual_at(L, field, mesh, u).norm for u in vertices), default=0.0)


def free_vertices(mesh, region=None) -> list:
    """Vertices off the mesh boundary whose incident faces all lie in the region."""
    if region is None:
        return mesh.interior_vertices()
    region = set(region)
    return [
        u
        for u in mesh.interior_vertices()
        if all(f in region for f, _ in mesh.faces_at_vertex(u))
    ]


def region_vertices(mesh, region=None) -> list:
    faces = range(mesh.n_faces) if region is None else region
    return sorted({v for f in faces for v in mesh.corners(f)})


# ---------------------------------------------------------------------------
# Newton


def _sup(R) -> float:
    return float(np.max(np.linalg.norm(R, axis=1))) if len(R) else 0.0


def _newton(op: EulerLagrangeOperator, potentials, unknowns, equations, tol, max_iter=MAX_ITER,
            jac_h=JAC_H, singular_exc=SingularJacobian):
    G, mesh = op.G, op.mesh
    d = G.fiber_dim
    unknowns, equations = list(unknowns), list(equations)
    P = [np.array(p) for p in potentials]
    report = SolveReport(n_unknowns=len(unknowns) * d)
    t0 = time.perf_counter()
    R = op.residuals(P, equations)
    norm = _sup(R)
    report.history.append((0, norm, 0.0))
    eq_rows = {u: n for n, u in enumerate(equations)}
    touching = {}
    for w in unknowns:
        near = {v for f, _ in mesh.faces_at_vertex(w) for v in mesh.corners(f)}
        touching[w] = [u for u in equations if u in near]
    eye = np.eye(d)

    def column(col):
        w, j = unknowns[col // d], col % d
        Pp = list(P)
        Pp[w] = G.retract(P[w], eye[j], jac_h)
        out = np.zeros((len(equations), d))
        for u in touching[w]:
            out[eq_rows[u]] = (op.vertex_residual(Pp, u) - R[eq_rows[u]]) / jac_h
        return out.ravel()

    it = 0
    while norm > tol:
        if it >= max_iter:
            report.iterations, report.residual_norm = it, norm
            report.wall_time = time.perf_counter() - t0
            report.message = f"no convergence after {max_iter} iterations"
            raise NonConvergence(report.message, report)
        it += 1
        ncol = len(unknowns) * d
        if op.workers > 1:
            with ThreadPoolExecutor(max_workers=op.workers) as pool:
                cols = list(pool.map(column, range(ncol)))
        else:
            cols = [column(c) for c in range(ncol)]
        J = np.stack(cols, axis=1)
        with warnings.catch_warnings():
            # singularity is reported through the pivot check below
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            lu, piv = scipy.linalg.lu_factor(J, check_finite=True)
        pivot = float(np.min(np.abs(np.diag(lu))))
        if pivot < PIVOT_TOL:
            report.iterations, report.residual_norm = it, norm
            report.wall_time = time.perf_counter() - t0
            report.message = f"singular Jacobian (smallest pivot {pivot:.3g})"
            raise singular_exc(report.message, report)
        delta = scipy.linalg.lu_solve((lu, piv), -R.ravel()).reshape(len(unknowns), d)
        # the merit function is the Euclidean norm, for which the Newton step is a descent direction
        merit = float(np.linalg.norm(R))
        step = 1.0
        for _ in range(MAX_HALVINGS + 1):
            Pn = list(P)
            for n, w in enumerate(unknowns):
                Pn[w] = G.retract(P[w], delta[n], step)
            Rn = op.residuals(Pn, equations)
            nn = _sup(Rn)
            if float(np.linalg.norm(Rn)) < merit:
                break
            step *= 0.5
        else:
            report.iterations, report.residual_norm = it, norm
            report.wall_time = time.perf_counter() - t0
            report.message = "line search failed to reduce the residual"
            raise NonConvergence(report.message, report)
        P, R, norm = Pn, Rn, nn
        report.history.append((it, norm, step * float(np.max(np.linalg.norm(delta, axis=1)))))
    report.iterations, report.residual_norm, report.converged = it, norm, True
    report.wall_time = time.perf_counter() - t0
    report.message = "converged"
    return P, report


def solve_boundary_value(L: Lagrangian, mesh, boundary_data: DiscreteField, region=None,
                         initial_guess: DiscreteField | None = None, newton_tol: float | None = None,
                         max_iter: int = MAX_ITER, jac_h: float = JAC_H, workers: int = 1):
    """Solve the field equations at the free vertices of ``region`` with the rest held fixed.

    Returns ``(field, report)``. Values at fixed vertices come from ``boundary_data``,
    starting values at free vertices from ``initial_guess`` (default: ``boundary_data``).
    """
    G = boundary_data.groupoid
    tol = default_newton_tol(G) if newton_tol is None else newton_tol
    P = potentials_of(boundary_data, mesh)
    free = free_vertices(mesh, region)
    if initial_guess is not None:
        guess = potentials_of(initial_guess, mesh)
        for u in free:
            P[u] = np.array(guess[u])
    op = EulerLagrangeOperator(L, mesh, G, region, workers)
    P, report = _newton(op, P, free, free, tol, max_iter, jac_h)
    return field_from_potentials(G, mesh, P), report


def solve_time_march(L: Lagrangian, mesh, initial_rows, steps: int, groupoid: Groupoid,
                     boundary=None, newton_tol: float | None = None, max_iter: int = MAX_ITER,
                     jac_h: float = JAC_H, workers: int = 1):
    """March a square grid row by row from two initial rows of potentials.

    Row ``j + 1`` is chosen so the residuals at the interior vertices of row ``j``
    vanish. ``boundary(i, j)`` gives the potentials at the end columns (held
    from the previous row by default). Rows beyond ``steps + 1`` keep the last
    computed row. Returns ``(field, MarchReport)``.
    """
    if mesh.kind != "square" or mesh.shape is None:
        raise MeshError("time marching needs a generated square mesh")
    nx, ny = mesh.shape
    if not 0 <= steps <= ny - 2:
        raise ValueError(f"steps must lie in 0..{ny - 2}")
    G = groupoid
    tol = default_newton_tol(G) if newton_tol is None else newton_tol
    row0, row1 = ([np.asarray(p, dtype=float) for p in r] for r in initial_rows)
    if len(row0) != nx or len(row1) != nx:
        raise ValueError(f"initial rows need {nx} values each")
    P = [None] * mesh.n_vertices
    for i in range(nx):
        P[mesh.vertex_at(i, 0)] = row0[i]
        P[mesh.vertex_at(i, 1)] = row1[i]
    op = EulerLagrangeOperator(L, mesh, G, None, workers)
    report = MarchReport()
    t0 = time.perf_counter()
    for j in range(1, steps + 1):
        for i in range(nx):
            prev, cur = P[mesh.vertex_at(i, j - 1)], P[mesh.vertex_at(i, j)]
            if i in (0, nx - 1):
                P[mesh.vertex_at(i, j + 1)] = np.array(cur) if boundary is None else np.asarray(boundary(i, j + 1), dtype=float)
            else:
                P[mesh.vertex_at(i, j + 1)] = G.retract(cur, G.potential_difference(prev, cur))
        unknowns = [mesh.vertex_at(i, j + 1) for i in range(1, nx - 1)]
        equations = [mesh.vertex_at(i, j) for i in range(1, nx - 1)]
        # faces above row j are not all known yet; fill later rows so jets can be built
        filled = [p if p is not None else P[mesh.vertex_at(mesh.grid_coords(u)[0], j + 1)] for u, p in enumerate(P)]
        try:
            filled, rep = _newton(op, filled, unknowns, equations, tol, max_iter, jac_h,
                                  singular_exc=DegenerateLegendre)
        except DegenerateLegendre as exc:
            exc.args = (f"row {j + 1}: {exc.args[0]}",)
            raise
        for u in unknowns:
            P[u] = filled[u]
        report.steps.append(rep)
        report.rows_computed = j + 2
    last = 1 + steps
    for j in range(last + 1, ny):
        for i in range(nx):
            P[mesh.vertex_at(i, j)] = np.array(P[mesh.vertex_at(i, last)])
    out = field_from_potentials(G, mesh, P)
    for j in range(min(last, ny - 1)):
        band = [f for f in range(mesh.n_faces) if mesh.grid_coords(mesh.corners(f)[-1])[1] == j]
        report.row_actions.append(action_sum(L, out, mesh, band))
    report.rows_computed = last + 1
    report.wall_time = time.perf_counter() - t0
    return out, report


# ---------------------------------------------------------------------------
# Multisymplecticity


def boundary_form(L: Lagrangian, G: Groupoid, mesh, potentials, vectors, region=None, free=None) -> float:
    """Pairing of the Poincare-Cartan forms with ``vectors`` over slots at non-free vertices."""
    faces = range(mesh.n_faces) if region is None else sorted(region)
    free = set(free_vertices(mesh, region) if free is None else free)
    total = 0.0
    for f in faces:
        jet = None
        for i in range(1, mesh.k + 1):
            src = mesh.source_vertex(f, i)
            if src in free or src not in vectors:
                continue
            v = vectors[src]
            if not np.any(v):
                continue
            if jet is None:
                jet = face_jet_from_potentials(G, mesh, potentials, f)
            total += float(pc_form(L, jet, i).covector.coeffs @ v)
    return total


def _boundary_part(gamma, fixed, d) -> dict:
    if isinstance(gamma, InfinitesimalVariation):
        return {u: gamma.at(u, d) for u in fixed}
    return {u: as_coeffs(gamma[u]) if u in gamma else np.zeros(d) for u in fixed}


def multisymplectic_defect(L: Lagrangian, field: DiscreteField, mesh, gamma1, gamma2, region=None,
                           h: float = 1e-4, newton_tol: float = 1e-13, check_tol: float | None = None,
                           max_iter: int = MAX_ITER) -> float:
    """Antisymmetrized boundary pairing of two first variations of a solution.

    ``gamma1`` and ``gamma2`` perturb the held (non-free) vertices of the region;
    the free vertices follow by re-solving, which linearizes the solution family.
    The boundary one-form is differentiated across the two-parameter family with
    central differences of step ``h``; the returned value vanishes on exact
    solutions.
    """
    G = field.groupoid
    d = G.fiber_dim
    mesh_free = free_vertices(mesh, region)
    fixed = [u for u in region_vertices(mesh, region) if u not in set(mesh_free)]
    check_tol = 10 * default_newton_tol(G) if check_tol is None else check_tol
    P0 = potentials_of(field, mesh)
    op = EulerLagrangeOperator(L, mesh, G, region)
    if mesh_free and _sup(op.residuals(P0, mesh_free)) > check_tol:
        raise NotASolution("field does not satisfy the field equations on the region")
    g1 = _boundary_part(gamma1, fixed, d)
    g2 = _boundary_part(gamma2, fixed, d)
    if not any(np.any(v) for v in g1.values()) or not any(np.any(v) for v in g2.values()):
        return 0.0
    if all(np.array_equal(g1[u], g2[u]) for u in fixed):
        return 0.0

    cache = {}

    def solve(a, b):
        if (a, b) not in cache:
            P = list(P0)
            for u in fixed:
                P[u] = G.retract(P0[u], a * h * g1[u] + b * h * g2[u])
            P, _ = _newton(op, P, mesh_free, mesh_free, newton_tol, max_iter)
            cache[(a, b)] = P
        return cache[(a, b)]

    def tangent(center, plus, minus):
        return {
            u: (G.potential_difference(center[u], plus[u]) - G.potential_difference(center[u], minus[u])) / (2 * h)
            for u in fixed
        }

    def theta(P, V):
        return boundary_form(L, G, mesh, P, V, region, mesh_free)

    # f1(s,t) pairs the boundary form with d/ds; f2 with d/dt
    f1 = {b: theta(solve(0, b), tangent(solve(0, b), solve(1, b), solve(-1, b))) for b in (1, -1)}
    f2 = {a: theta(solve(a, 0), tangent(solve(a, 0), solve(a, 1), solve(a, -1))) for a in (1, -1)}
    return abs((f2[1] - f2[-1]) / (2 * h) - (f1[1] - f1[-1]) / (2 * h))


# ---------------------------------------------------------------------------
# Reduction


def reduce_lagrangian(L: Lagrangian, pair_groupoid: PairGroupoid, probes: int = 20,
                      inv_tol: float = 1e-8, rng=None, scale: float = 0.8) -> Lagrangian:
    """Reduced Lagrangian on the group of a left-invariant L on the pair groupoid over it.

    L'(a_1, ..., a_k) = L at sources (I, a_1, a_1 a_2, ...). Raises ``NotInvariant``
    when a random left translation changes L by more than ``inv_tol``.
    """
    group = pair_groupoid.manifold
    rng = np.random.default_rng(0) if rng is None else rng
    worst = 0.0
    for _ in range(probes):
        # neighbouring sources stay close so relative elements have a logarithm
        hs = [group.random(rng, np.pi / 2)]
        for _ in range(L.k - 1):
            hs.append(group.compose(hs[-1], group.random(rng, scale / L.k)))
        g = group.random(rng, np.pi / 2)
        base = L.evaluate(jet_from_sources(pair_groupoid, hs))
        moved = L.evaluate(jet_from_sources(pair_groupoid, [group.compose(g, x) for x in hs]))
        worst = max(worst, abs(moved - base))
    if worst > inv_tol:
        raise NotInvariant(f"Lagrangian is not left-invariant (worst change {worst:.3g})", worst)

    def evaluate(jet: JetElement) -> float:
        q = [group.identity()]
        for a in jet.components[:-1]:
            q.append(group.compose(q[-1], a))
        return L.evaluate(jet_from_sources(pair_groupoid, q))

    return Lagrangian(evaluate, L.k, None, f"reduced({L.name})", {"invariance_defect": worst})


def induced_group_field(field: DiscreteField, mesh) -> DiscreteField:
    """Compose a field on the pair groupoid over a group with (g, h) -> g^{-1} h."""
    G = field.groupoid
    if not isinstance(G, PairGroupoid) or isinstance(G.manifold, EuclideanSpace):
        raise TypeError("need a field on the pair groupoid over a matrix group")
    return field_from_potentials(LieGroupGroupoid(G.manifold, G.tol), mesh, potentials_of(field, mesh))


def lhat_from_lagrangian(L: Lagrangian, G: LieGroupGroupoid):
    """L on triangles over a group as a function of the first two components."""

    def lhat(g1, g2):
        g3 = G.inverse(G.compose(g1, g2))
        return L.evaluate(JetElement(G, (np.asarray(g1), np.asarray(g2), g3)))

    return lhat


def lie_poisson_residual(lhat, field: DiscreteField, mesh, u: int, h: float | None = None) -> AlgebroidCovector:
    """Reduced field equations at an interior vertex of the triangular grid.

    Sums, for each basis direction, the four curve derivatives of ``lhat`` at the
    three triangles meeting at ``u``: left translation of the outgoing horizontal
    edge, right translation of the incoming vertical edge, and both translations
    around ``u`` on the triangle to its left.
    """
    if mesh.kind != "triangular" or mesh.shape is None:
        raise MeshError("the Lie-Poisson residual is defined on the generated triangular grid")
    if mesh.is_boundary(u):
        raise BoundaryVertexError(f"vertex {u} is on the mesh boundary")
    G = field.groupoid
    if not isinstance(G, LieGroupGroupoid):
        raise TypeError("the Lie-Poisson residual needs a Lie group realization")
    h = G.tol.fd_h if h is None else h
    a, b = mesh.grid_coords(u)
    V = mesh.vertex_at

    def phi(p, q):
        return field.edge(V(*p), V(*q))

    g1, g2 = phi((a, b), (a + 1, b)), phi((a + 1, b), (a + 1, b + 1))
    gh1, gh2 = phi((a - 1, b - 1), (a, b - 1)), phi((a, b - 1), (a, b))
    gt1, gt2 = phi((a - 1, b), (a, b)), phi((a, b), (a, b + 1))
    exp = G.exp
    out = np.zeros(G.fiber_dim)
    for j in range(G.fiber_dim):
        e = np.zeros(G.fiber_dim)
        e[j] = 1.0

        def d(fn):
            return (fn(h) - fn(-h)) / (2 * h)

        out[j] = (
            d(lambda t: lhat(exp(-t * e) @ g1, g2))
            + d(lambda t: lhat(gh1, gh2 @ exp(t * e)))
            + d(lambda t: lhat(gt1 @ exp(t * e), gt2))
            + d(lambda t: lhat(gt1, exp(-t * e) @ gt2))
        )
    return G.covector(G.unit_point, out)
