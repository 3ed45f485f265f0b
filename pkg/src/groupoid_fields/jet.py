"""Discrete jets: k-gons in a groupoid, their variations, and tangent lifts.

A jet ``[g] = (g_1, ..., g_k)`` has consecutive composable components and a
cyclic product equal to a unit. Slots are numbered ``1..k``; slot ``i`` sits at
the source ``alpha(g_i)``. Varying slot ``i`` along an alpha-curve ``h_i(t)``
moves component ``i - 1`` (right multiplication by ``h_i``) and component
``i`` (left multiplication by ``h_i^{-1}``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import BaseMismatch, CycleDefect, NotComposable
from .groupoid import AlgebroidVector, Groupoid, as_coeffs


@dataclass(frozen=True)
class JetElement:
    groupoid: Groupoid
    components: tuple

    @property
    def k(self) -> int:
        return len(self.components)

    def __getitem__(self, i: int):
        """1-based component access with the modulo-k convention."""
        return self.components[(i - 1) % self.k]

    def sources(self) -> list:
        return [self.groupoid.alpha(g) for g in self.components]


@dataclass(frozen=True)
class JetVariation:
    base: JetElement
    vectors: tuple


def cycle_product(G: Groupoid, components):
    prod = components[0]
    for g in components[1:]:
        prod = G.compose(prod, g)
    return prod


def make_jet(G: Groupoid, components, cycle_tol: float | None = None) -> JetElement:
    """Validate ``components`` as an element of the discrete jet space."""
    comps = tuple(np.asarray(g, dtype=float) for g in components)
    if not comps:
        raise ValueError("a jet needs at least one component")
    tol = G.tol.cycle_tol if cycle_tol is None else cycle_tol
    # the wrap-around pair (g_k, g_1) is covered by the cycle check below
    for i in range(len(comps) - 1):
        g, h = comps[i], comps[i + 1]
        d = G.base_distance(G.beta(g), G.alpha(h))
        if d > G.tol.compose_tol:
            raise NotComposable(f"components {i + 1} and {i + 2} are not composable (gap {d:.3g})", index=i + 1)
    prod = cycle_product(G, comps)
    defect = G.unit_defect(prod)
    if G.base_distance(G.alpha(prod), G.alpha(comps[0])) > G.tol.compose_tol:
        defect = max(defect, G.base_distance(G.alpha(prod), G.alpha(comps[0])))
    if defect > tol:
        raise CycleDefect(f"cyclic product deviates from a unit by {defect:.3g}", defect)
    return JetElement(G, comps)


def unit_jet(G: Groupoid, x, k: int) -> JetElement:
    e = G.identity(x)
    return JetElement(G, tuple(e.copy() for _ in range(k)))


def jet_from_sources(G: Groupoid, potentials) -> JetElement:
    """Jet whose i-th component runs from potential i to potential i+1 (cyclically)."""
    k = len(potentials)
    return JetElement(
        G, tuple(G.edge_from_potentials(potentials[i], potentials[(i + 1) % k]) for i in range(k))
    )


def invert_jet(jet: JetElement) -> JetElement:
    G = jet.groupoid
    return JetElement(G, tuple(G.inverse(g) for g in reversed(jet.components)))


def source_map(i: int, jet: JetElement):
    if not 1 <= i <= jet.k:
        raise IndexError(f"slot {i} out of range 1..{jet.k}")
    return jet.groupoid.alpha(jet.components[i - 1])


def _vector_list(jet: JetElement, vectors) -> list:
    if len(vectors) != jet.k:
        raise BaseMismatch(f"expected {jet.k} vectors, got {len(vectors)}")
    G = jet.groupoid
    out = []
    for i, v in enumerate(vectors):
        if isinstance(v, AlgebroidVector):
            src = G.alpha(jet.components[i])
            if G.base_distance(v.base, src) > G.tol.compose_tol:
                raise BaseMismatch(f"vector {i + 1} is not based at alpha(g_{i + 1})")
        c = as_coeffs(v)
        if c.shape != (G.fiber_dim,):
            raise BaseMismatch(f"vector {i + 1} has shape {c.shape}, expected ({G.fiber_dim},)")
        out.append(c)
    return out


def vary_jet(jet: JetElement, vectors, t: float) -> JetElement:
    """Component i becomes h_i(t)^{-1} g_i h_{i+1}(t) with h_i the alpha-curve of v_i."""
    G = jet.groupoid
    vs = _vector_list(jet, vectors)
    k = jet.k
    curves = [G.alpha_curve(G.alpha(jet.components[i]), vs[i], t) for i in range(k)]
    comps = []
    for i in range(k):
        g = G.compose(G.inverse(curves[i]), jet.components[i])
        comps.append(G.compose(g, curves[(i + 1) % k]))
    return JetElement(G, tuple(comps))


def _vary_slot(jet: JetElement, i: int, coeffs, t: float) -> JetElement:
    G = jet.groupoid
    k = jet.k
    comps = list(jet.components)
    h = G.alpha_curve(G.alpha(comps[i - 1]), coeffs, t)
    prev = (i - 2) % k
    comps[prev] = G.compose(comps[prev], h)
    comps[i - 1] = G.compose(G.inverse(h), comps[i - 1])
    return JetElement(G, tuple(comps))


def directional_derivative(L, jet: JetElement, vectors, h: float | None = None) -> float:
    """d/dt at 0 of L along the jet variation generated by ``vectors``."""
    vs = _vector_list(jet, vectors)
    if not any(np.any(v) for v in vs):
        return 0.0
    if L.exact_lift_derivative is not None:
        return float(sum(L.exact_lift_derivative(jet, i + 1, v) for i, v in enumerate(vs) if np.any(v)))
    h = jet.groupoid.tol.fd_h if h is None else h
    return (L.evaluate(vary_jet(jet, vs, h)) - L.evaluate(vary_jet(jet, vs, -h))) / (2.0 * h)


def tangent_lift_derivative(L, jet: JetElement, i: int, v, h: float | None = None) -> float:
    """Derivative of L along the i-th tangent lift of ``v`` (a vector at alpha(g_i))."""
    if not 1 <= i <= jet.k:
        raise IndexError(f"slot {i} out of range 1..{jet.k}")
    G = jet.groupoid
    if isinstance(v, AlgebroidVector) and G.base_distance(v.base, G.alpha(jet.components[i - 1])) > G.tol.compose_tol:
        raise BaseMismatch(f"vector is not based at alpha(g_{i})")
    c = as_coeffs(v)
    if c.shape != (G.fiber_dim,):
        raise BaseMismatch(f"vector has shape {c.shape}, expected ({G.fiber_dim},)")
    if not np.any(c):
        return 0.0
    if L.exact_lift_derivative is not None:
        return float(L.exact_lift_derivative(jet, i, c))
    h = G.tol.fd_h if h is None else h
    return (L.evaluate(_vary_slot(jet, i, c, h)) - L.evaluate(_vary_slot(jet, i, c, -h))) / (2.0 * h)


def random_jet(G: Groupoid, k: int, rng, scale: float = 1.0) -> JetElement:
    """A random element of the jet space built from random potentials."""
    return jet_from_sources(G, [G.random_potential(rng, scale) for _ in range(k)])
