"""Property suite behind ``groupoid-fields check``.

Each check draws its random probes from one seeded generator and returns the
measured defect next to the tolerance it is held to.
"""

from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from .field import (
    extend_to_morphism,
    field_from_potentials,
    random_field,
    random_path,
    validate_field,
)
from .gauge import gauge_from_field, is_flat
from .groupoid import parse_groupoid
from .jet import directional_derivative, random_jet
from .lagrangian import make_lagrangian, pc_form
from .mesh import build_square_mesh, build_triangular_mesh
from .solver import (
    free_vertices,
    lhat_from_lagrangian,
    lie_poisson_residual,
    multisymplectic_defect,
    reduce_lagrangian,
    residual_at,
    solve_boundary_value,
)


@dataclass
class CheckResult:
    name: str
    passed: bool
    value: float
    tol: float
    detail: str = ""
    seconds: float = 0.0


def _timed(name, tol, fn, *args):
    t0 = time.perf_counter()
    value, detail = fn(*args)
    return CheckResult(name, bool(value < tol), float(value), tol, detail, time.perf_counter() - t0)


def check_groupoid_axioms(rng, n=200):
    worst = 0.0
    for spec in ("pair:R2", "pair:SO3", "group:SO3", "group:GL2"):
        G = parse_groupoid(spec)
        for _ in range(n):
            pots = [G.random_potential(rng, 0.7) for _ in range(4)]
            g, h, k = (G.edge_from_potentials(pots[i], pots[i + 1]) for i in range(3))
            assoc = np.linalg.norm(G.compose(G.compose(g, h), k) - G.compose(g, G.compose(h, k)))
            unit = np.linalg.norm(G.compose(G.identity(G.alpha(g)), g) - g)
            inv = np.linalg.norm(G.compose(G.inverse(g), g) - G.identity(G.beta(g)))
            worst = max(worst, assoc, unit, inv)
    return worst, "associativity, unit and inverse axioms"


def check_dl_decomposition(rng, n=50):
    worst = 0.0
    cases = [("pair:R2", "laplace", 4, {"quartic": 0.3}), ("group:SO3", "chiral", 3, {})]
    for spec, name, k, params in cases:
        G = parse_groupoid(spec)
        for L in (make_lagrangian(name, G, k, params), make_lagrangian(name, G, k, params).without_exact()):
            for _ in range(n // 2):
                jet = random_jet(G, k, rng, 0.5)
                vs = [rng.standard_normal(G.fiber_dim) for _ in range(k)]
                total = sum(pc_form(L, jet, i + 1).covector.coeffs @ vs[i] for i in range(k))
                worst = max(worst, abs(total - directional_derivative(L, jet, vs)))
    return worst, "sum of Poincare-Cartan pairings vs directional derivative"


def check_path_independence(rng, pairs=10):
    mesh = build_square_mesh(5, 5)
    worst = 0.0
    for spec in ("pair:R2", "group:SO3"):
        G = parse_groupoid(spec)
        field = random_field(G, mesh, rng, 0.6)
        for _ in range(pairs):
            x, y = (int(v) for v in rng.integers(0, mesh.n_vertices, 2))
            a = extend_to_morphism(field, mesh, x, y, random_path(mesh, x, y, rng))
            b = extend_to_morphism(field, mesh, x, y, random_path(mesh, x, y, rng))
            worst = max(worst, float(np.linalg.norm(a - b)))
    return worst, "random path pairs on a 5x5 grid"


def check_field_axioms(rng, corrupt=False):
    mesh = build_square_mesh(4, 4)
    G = parse_groupoid("group:GL2")
    field = random_field(G, mesh, rng, 0.4)
    if corrupt:
        swap = np.array([[0.0, 1.0], [1.0, 0.0]])
        field.vertex_values = [np.zeros(0) for _ in field.vertex_values]
        field.edge_values = {e: swap.copy() for e in field.edge_values}
    report = validate_field(field, mesh)
    if report.ok:
        return 0.0, "all three axioms hold"
    first = report.first
    return float(len(report.violations)), f"axiom {first.item} violated first on edge {first.edge}"


def check_reduction(rng):
    PG = parse_groupoid("pair:SO3")
    S = parse_groupoid("group:SO3")
    mesh = build_triangular_mesh(4, 4)
    Lp = make_lagrangian("pair_chiral", PG, 3)
    Lr = reduce_lagrangian(Lp, PG, rng=rng)
    sol, _ = solve_boundary_value(Lr, mesh, random_field(S, mesh, rng, 0.4), newton_tol=1e-10)
    lifted = field_from_potentials(PG, mesh, sol.potentials)
    lhat = lhat_from_lagrangian(Lr, S)
    worst = 0.0
    for u in mesh.interior_vertices():
        lp = lie_poisson_residual(lhat, sol, mesh, u).coeffs
        worst = max(worst, float(np.linalg.norm(residual_at(Lp, lifted, mesh, u).covector.coeffs)),
                    float(np.linalg.norm(lp - residual_at(Lr, sol, mesh, u).covector.coeffs)))
    return worst, "unreduced residual and cross-assembly gap"


def check_multisymplectic(rng, pairs=2):
    G = parse_groupoid("pair:R1")
    mesh = build_square_mesh(4, 4)
    L = make_lagrangian("laplace", G, 4, {"quartic": 0.5})
    sol, _ = solve_boundary_value(L, mesh, random_field(G, mesh, rng), newton_tol=1e-13)
    free = set(free_vertices(mesh))
    fixed = [u for u in range(mesh.n_vertices) if u not in free]
    worst = 0.0
    for _ in range(pairs):
        g1 = {u: rng.standard_normal(1) for u in fixed}
        g2 = {u: rng.standard_normal(1) for u in fixed}
        worst = max(worst, multisymplectic_defect(L, sol, mesh, g1, g2))
    return worst, "boundary pairing of first variations"


def check_flatness(rng):
    mesh = build_square_mesh(4, 4)
    G = parse_groupoid("group:SO3")
    rep = is_flat(gauge_from_field(random_field(G, mesh, rng, 0.8), mesh), mesh)
    return rep.worst, "plaquette products of a field-induced gauge field"


def run_checks(seed: int = 0, corrupt: bool = False) -> list:
    rng = np.random.default_rng(seed)
    results = [
        _timed("groupoid_axioms", 1e-9, check_groupoid_axioms, rng),
        _timed("dl_decomposition", 1e-6, check_dl_decomposition, rng),
        _timed("path_independence", 1e-9, check_path_independence, rng),
        _timed("field_axioms", 0.5, check_field_axioms, rng, corrupt),
        _timed("reduction", 1e-7, check_reduction, rng),
        _timed("multisymplectic", 1e-5, check_multisymplectic, rng),
        _timed("flatness", 1e-8, check_flatness, rng),
    ]
    return results
