"""Discrete Lagrangians, Poincare-Cartan forms, Legendre maps and action sums."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import ConfigError
from .groupoid import (
    AlgebroidCovector,
    EuclideanSpace,
    Groupoid,
    LieGroupGroupoid,
    MatrixGroup,
    PairGroupoid,
    SO3,
)
from .jet import JetElement, tangent_lift_derivative


@dataclass
class Lagrangian:
    """A real function on the jet space of face degree ``k``.

    ``exact_lift_derivative(jet, i, coeffs)`` may be supplied to bypass finite
    differences; it must return the derivative along the i-th tangent lift.
    """

    evaluate: Callable[[JetElement], float]
    k: int
    exact_lift_derivative: Callable | None = None
    name: str = "custom"
    params: dict = field(default_factory=dict)

    def __call__(self, jet: JetElement) -> float:
        return self.evaluate(jet)

    def without_exact(self) -> "Lagrangian":
        return Lagrangian(self.evaluate, self.k, None, self.name, dict(self.params))


@dataclass(frozen=True)
class PCFormValue:
    slot: int
    covector: AlgebroidCovector


def pc_form(L: Lagrangian, jet: JetElement, i: int) -> PCFormValue:
    """The i-th Poincare-Cartan form at ``jet`` as a covector at alpha(g_i)."""
    if jet.k != L.k:
        raise ValueError(f"jet has degree {jet.k}, Lagrangian expects {L.k}")
    if not 1 <= i <= jet.k:
        raise IndexError(f"slot {i} out of range 1..{jet.k}")
    G = jet.groupoid
    eye = np.eye(G.fiber_dim)
    coeffs = np.array([tangent_lift_derivative(L, jet, i, eye[j]) for j in range(G.fiber_dim)])
    return PCFormValue(i, G.covector(G.alpha(jet.components[i - 1]), coeffs))


def legendre(L: Lagrangian, jet: JetElement, i: int) -> AlgebroidCovector:
    """Base map of the i-th Legendre transformation; shares pc_form's computation."""
    return pc_form(L, jet, i).covector


def action_sum(L: Lagrangian, field, mesh, region=None, workers: int = 1) -> float:
    """Sum of L over the jets of the faces in ``region`` (all faces by default)."""
    from .field import jet_of

    faces = sorted(range(mesh.n_faces) if region is None else set(region))
    if not faces:
        return 0.0
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            values = list(pool.map(lambda f: L.evaluate(jet_of(field, mesh, f)), faces))
    else:
        values = [L.evaluate(jet_of(field, mesh, f)) for f in faces]
    return float(sum(values))


# ---------------------------------------------------------------------------
# Catalog


def pair_lagrangian(func, k: int, grad=None, name: str = "custom", params=None) -> Lagrangian:
    """Lagrangian on the pair groupoid over R^n given as a function of the k sources.

    ``func`` receives an array ``q`` of shape ``(k, n)`` with ``q[i-1] = alpha(g_i)``.
    ``grad(q)`` (optional) returns the array of partial derivatives, same shape.
    """

    def evaluate(jet):
        return float(func(np.stack(jet.sources())))

    exact = None
    if grad is not None:

        def exact(jet, i, coeffs):
            return float(np.asarray(grad(np.stack(jet.sources())))[i - 1] @ coeffs)

    return Lagrangian(evaluate, k, exact, name, dict(params or {}))


def quadratic_edge_lagrangian(k: int, weights, mass: float = 0.0, quartic: float = 0.0,
                              potential_scale: float = 1.0, name: str = "quadratic") -> Lagrangian:
    """1/2 sum_i w_i |q_{i+1} - q_i|^2 - (s/k) sum_i V(q_i), V = m^2|q|^2/2 + lam|q|^4/4."""
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ConfigError(f"need {k} edge weights, got {w.shape}")

    def func(q):
        dq = np.roll(q, -1, axis=0) - q
        kinetic = 0.5 * float(np.sum(w * np.sum(dq * dq, axis=1)))
        r2 = np.sum(q * q, axis=1)
        pot = float(np.sum(0.5 * mass**2 * r2 + 0.25 * quartic * r2 * r2))
        return kinetic - potential_scale * pot / k

    def grad(q):
        dq = np.roll(q, -1, axis=0) - q
        wd = w[:, None] * dq
        g = np.roll(wd, 1, axis=0) - wd
        r2 = np.sum(q * q, axis=1)[:, None]
        return g - potential_scale * (mass**2 * q + quartic * r2 * q) / k

    params = dict(weights=w.tolist(), mass=mass, quartic=quartic, potential_scale=potential_scale)
    return pair_lagrangian(func, k, grad, name, params)


def _require_euclidean_pair(G, name):
    if not (isinstance(G, PairGroupoid) and isinstance(G.manifold, EuclideanSpace)):
        raise ConfigError(f"Lagrangian {name!r} needs a pair groupoid over R^n, got {G.spec}")


def _laplace(G, k, weight=1.0, mass=0.0, quartic=0.0):
    _require_euclidean_pair(G, "laplace")
    return quadratic_edge_lagrangian(k, [weight] * k, mass, quartic, name="laplace")


def _wave(G, k, dx=1.0, dt=1.0, speed=1.0, mass=0.0, quartic=0.0):
    """Lorentzian quad discretization: edges 1, 3 spatial and edges 2, 4 temporal."""
    _require_euclidean_pair(G, "wave")
    if k != 4:
        raise ConfigError("the wave Lagrangian is defined on quadrilateral faces")
    w_space = -speed**2 * dt / (2.0 * dx)
    w_time = dx / (2.0 * dt)
    L = quadratic_edge_lagrangian(4, [w_space, w_time, w_space, w_time], mass, quartic,
                                  potential_scale=dx * dt, name="wave")
    L.params.update(dx=dx, dt=dt, speed=speed)
    return L


def _constant(G, k, value=1.0):
    return Lagrangian(lambda jet: float(value), k, lambda jet, i, c: 0.0, "constant", {"value": value})


def _chiral_weights(k, weights):
    if weights is None:
        weights = [1.0] * (k - 1) + [0.0]
    w = np.asarray(weights, dtype=float)
    if w.shape != (k,):
        raise ConfigError(f"need {k} component weights, got {w.shape}")
    return w


def _chiral(G, k, weights=None):
    """sum_i w_i |log g_i|^2 / 2 on a matrix group; default skips the last component."""
    if not isinstance(G, LieGroupGroupoid):
        raise ConfigError(f"Lagrangian 'chiral' needs a Lie group realization, got {G.spec}")
    w = _chiral_weights(k, weights)
    group = G.group

    def evaluate(jet):
        total = 0.0
        for wi, g in zip(w, jet.components):
            if wi:
                th = group.log(g)
                total += 0.5 * wi * float(th @ th)
        return total

    exact = None
    if isinstance(group, SO3):
        # invariant metric on so(3): d/dt |log(g exp(tv))|^2/2 = <log g, v>
        def exact(jet, i, coeffs):
            prev = (i - 2) % k
            out = 0.0
            if w[prev]:
                out += w[prev] * float(group.log(jet.components[prev]) @ coeffs)
            if w[i - 1]:
                out -= w[i - 1] * float(group.log(jet.components[i - 1]) @ coeffs)
            return out

    return Lagrangian(evaluate, k, exact, "chiral", {"weights": w.tolist()})


def _pair_chiral(G, k, weights=None):
    """Left-invariant sum_i w_i |log(q_i^{-1} q_{i+1})|^2 / 2 on a pair groupoid over a group."""
    if not (isinstance(G, PairGroupoid) and isinstance(G.manifold, MatrixGroup)):
        raise ConfigError(f"Lagrangian 'pair_chiral' needs a pair groupoid over a matrix group, got {G.spec}")
    w = _chiral_weights(k, weights)
    group = G.manifold

    def evaluate(jet):
        q = jet.sources()
        total = 0.0
        for i in range(k):
            if w[i]:
                th = group.log(group.compose(group.inverse(q[i]), q[(i + 1) % k]))
                total += 0.5 * w[i] * float(th @ th)
        return total

    return Lagrangian(evaluate, k, None, "pair_chiral", {"weights": w.tolist()})


_REGISTRY: dict = {
    "laplace": _laplace,
    "wave": _wave,
    "constant": _constant,
    "chiral": _chiral,
    "pair_chiral": _pair_chiral,
}


def register_lagrangian(name: str, factory) -> None:
    """Register ``factory(groupoid, k, **params) -> Lagrangian`` under ``name``."""
    _REGISTRY[name] = factory


def available_lagrangians() -> list:
    return sorted(_REGISTRY)


def make_lagrangian(name: str, groupoid: Groupoid, k: int, params: dict | None = None) -> Lagrangian:
    try:
        factory = _REGISTRY[name]
    except KeyError:
        raise ConfigError(f"unknown Lagrangian {name!r}; available: {available_lagrangians()}") from None
    try:
        return factory(groupoid, k, **(params or {}))
    except TypeError as exc:
        raise ConfigError(f"bad parameters for Lagrangian {name!r}: {exc}") from exc
