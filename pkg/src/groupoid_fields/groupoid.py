"""Lie groupoids, their algebroid fibers, and the concrete realizations used here.

Two realizations are provided:

* ``PairGroupoid(M)``: the pair groupoid ``M x M`` over a base manifold ``M``.
  ``M`` is either Euclidean space ``R^n`` or a matrix Lie group used as a plain
  manifold. Arrows are stored as arrays of shape ``(2,) + M.shape``.
* ``LieGroupGroupoid(G)``: a matrix Lie group viewed as a groupoid over a
  single point. Arrows are ``n x n`` arrays; the base point is the empty vector.

Algebroid vectors are coefficient vectors in a fixed fiber basis. For ``R^n``
the basis is the standard one. For matrix groups it is the ordered basis
``group.basis`` of the Lie algebra, and tangent vectors at a point ``x`` of a
group manifold are left-trivialized (``x exp(t xi)``).

Besides the groupoid operations, each realization exposes a *potential*
parametrization of discrete fields: a field is determined by one potential per
vertex, with edge value ``edge_from_potentials(P_u, P_v)``. Varying a vertex
along its alpha-curve is the same as ``retract``-ing its potential.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import (
    BaseMismatch,
    ConfigError,
    NotComposable,
    OutsideInjectivityRadius,
    SingularElement,
)


@dataclass(frozen=True)
class Tolerances:
    compose_tol: float = 1e-9
    exp_tol: float = 1e-10
    fd_tol: float = 1e-6
    fd_h: float = 1e-5
    det_tol: float = 1e-12
    ortho_tol: float = 1e-9
    cycle_tol: float = 1e-8
    log_radius: float = math.pi - 0.1


DEFAULT_TOL = Tolerances()


@dataclass(frozen=True)
class AlgebroidVector:
    """Element of the fiber A_xG, stored by its coefficients in the fixed basis."""

    base: np.ndarray
    coeffs: np.ndarray


@dataclass(frozen=True)
class AlgebroidCovector:
    base: np.ndarray
    coeffs: np.ndarray


def as_coeffs(v) -> np.ndarray:
    if isinstance(v, (AlgebroidVector, AlgebroidCovector)):
        return np.asarray(v.coeffs, dtype=float)
    return np.asarray(v, dtype=float)


def pairing(p: AlgebroidCovector, v: AlgebroidVector, tol: float = DEFAULT_TOL.compose_tol) -> float:
    """Dual pairing <p, v> as the dot product of coefficient vectors."""
    pb, vb = np.asarray(p.base), np.asarray(v.base)
    if pb.shape != vb.shape or (pb.size and np.max(np.abs(pb - vb)) > tol):
        raise BaseMismatch("covector and vector live over different base points")
    pc, vc = as_coeffs(p), as_coeffs(v)
    if pc.shape != vc.shape:
        raise BaseMismatch(f"dimension mismatch {pc.shape} vs {vc.shape}")
    return float(pc @ vc)


# ---------------------------------------------------------------------------
# Base manifolds / matrix groups


class EuclideanSpace:
    """R^n with the additive retraction x + t v."""

    def __init__(self, n: int):
        if n < 1:
            raise ConfigError("Euclidean dimension must be >= 1")
        self.n = n
        self.dim = n
        self.shape = (n,)
        self.name = f"R{n}"

    def retract(self, x, coeffs, t=1.0):
        return np.asarray(x, dtype=float) + t * np.asarray(coeffs, dtype=float)

    def difference(self, x, y):
        return np.asarray(y, dtype=float) - np.asarray(x, dtype=float)

    def distance(self, x, y) -> float:
        return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))

    def random(self, rng, scale=1.0):
        return scale * rng.standard_normal(self.n)

    def __repr__(self):
        return f"EuclideanSpace({self.n})"


class MatrixGroup:
    """A closed subgroup of GL(n) with a declared ordered Lie algebra basis."""

    name = "matrix"

    def __init__(self, n: int, basis, tol: Tolerances = DEFAULT_TOL):
        self.n = n
        self.basis = [np.asarray(b, dtype=float) for b in basis]
        self.dim = len(self.basis)
        self.shape = (n, n)
        self.tol = tol
        self._gram = np.array([[np.sum(a * b) for b in self.basis] for a in self.basis])

    def hat(self, coeffs) -> np.ndarray:
        c = np.asarray(coeffs, dtype=float)
        return np.tensordot(c, np.asarray(self.basis), axes=1)

    def vee(self, X) -> np.ndarray:
        rhs = np.array([np.sum(np.asarray(X) * b) for b in self.basis])
        return np.linalg.solve(self._gram, rhs)

    def identity(self) -> np.ndarray:
        return np.eye(self.n)

    def compose(self, a, b) -> np.ndarray:
        return np.asarray(a) @ np.asarray(b)

    def inverse(self, a) -> np.ndarray:
        a = np.asarray(a, dtype=float)
        if abs(np.linalg.det(a)) <= self.tol.det_tol:
            raise SingularElement("matrix is singular")
        return np.linalg.inv(a)

    def exp(self, coeffs) -> np.ndarray:
        return scipy.linalg.expm(self.hat(coeffs))

    def log(self, g) -> np.ndarray:
        g = np.asarray(g, dtype=float)
        ev = np.linalg.eigvals(g)
        bad = (np.abs(ev.imag) <= 1e-12) & (ev.real <= 0)
        if np.any(bad):
            raise OutsideInjectivityRadius("matrix has eigenvalues on the closed negative real axis")
        X = scipy.linalg.logm(g)
        if np.iscomplexobj(X):
            if np.max(np.abs(X.imag)) > 1e-8:
                raise OutsideInjectivityRadius("principal logarithm is not real")
            X = X.real
        return self.vee(X)

    # manifold interface (left-trivialized tangent coordinates)
    def retract(self, x, coeffs, t=1.0):
        return self.compose(x, self.exp(t * np.asarray(coeffs, dtype=float)))

    def difference(self, x, y):
        return self.log(self.compose(self.inverse(x), y))

    def distance(self, x, y) -> float:
        return float(np.linalg.norm(np.asarray(x) - np.asarray(y)))

    def random(self, rng, scale=1.0):
        return self.exp(scale * rng.standard_normal(self.dim))

    def __repr__(self):
        return f"{type(self).__name__}()"


def _so3_hat(w):
    x, y, z = w
    return np.array([[0.0, -z, y], [z, 0.0, -x], [-y, x, 0.0]])


class SO3(MatrixGroup):
    """Rotation group with closed-form exp/log and drift control on products."""

    name = "SO3"

    def __init__(self, tol: Tolerances = DEFAULT_TOL):
        basis = [_so3_hat(e) for e in np.eye(3)]
        super().__init__(3, basis, tol)

    def hat(self, coeffs):
        return _so3_hat(np.asarray(coeffs, dtype=float))

    def vee(self, X):
        X = np.asarray(X)
        return np.array([X[2, 1] - X[1, 2], X[0, 2] - X[2, 0], X[1, 0] - X[0, 1]]) / 2.0

    def exp(self, coeffs):
        w = np.asarray(coeffs, dtype=float)
        theta2 = float(w @ w)
        W = _so3_hat(w)
        if theta2 < 1e-8:
            a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0
            b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0
        else:
            theta = math.sqrt(theta2)
            a = math.sin(theta) / theta
            b = (1.0 - math.cos(theta)) / theta2
        return np.eye(3) + a * W + b * (W @ W)

    def log(self, g):
        R = np.asarray(g, dtype=float)
        c = min(1.0, max(-1.0, (np.trace(R) - 1.0) / 2.0))
        theta = math.acos(c)
        if theta > self.tol.log_radius:
            raise OutsideInjectivityRadius(f"rotation angle {theta:.6g} exceeds log radius {self.tol.log_radius:.6g}")
        if theta < 1e-4:
            t2 = theta * theta
            factor = 0.5 + t2 / 12.0 + 7.0 * t2 * t2 / 720.0
        else:
            factor = theta / (2.0 * math.sin(theta))
        return factor * np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]])

    def inverse(self, a):
        return np.asarray(a, dtype=float).T.copy()

    def orthogonality_defect(self, R) -> float:
        R = np.asarray(R)
        return float(np.linalg.norm(R.T @ R - np.eye(3)))

    def project(self, R) -> np.ndarray:
        """Nearest rotation in the Frobenius sense (polar decomposition)."""
        U, _, Vt = np.linalg.svd(np.asarray(R, dtype=float))
        Q = U @ Vt
        if np.linalg.det(Q) < 0:
            U[:, -1] *= -1
            Q = U @ Vt
        return Q

    def compose(self, a, b):
        R = np.asarray(a) @ np.asarray(b)
        if self.orthogonality_defect(R) > self.tol.ortho_tol / 10.0:
            R = self.project(R)
        return R


class GL(MatrixGroup):
    """General linear group GL(n) with the elementary-matrix basis of gl(n)."""

    def __init__(self, n: int, tol: Tolerances = DEFAULT_TOL):
        if n < 1:
            raise ConfigError("GL(n) needs n >= 1")
        basis = []
        for a in range(n):
            for b in range(n):
                E = np.zeros((n, n))
                E[a, b] = 1.0
                basis.append(E)
        super().__init__(n, basis, tol)
        self.name = f"GL{n}"

    def hat(self, coeffs):
        return np.asarray(coeffs, dtype=float).reshape(self.n, self.n)

    def vee(self, X):
        return np.asarray(X, dtype=float).reshape(-1).copy()


# ---------------------------------------------------------------------------
# Groupoids


class Groupoid:
    """Common interface of the realizations. Subclasses fill in the operations."""

    spec: str
    fiber_dim: int
    base_shape: tuple
    element_shape: tuple

    def __init__(self, tol: Tolerances = DEFAULT_TOL):
        self.tol = tol

    def vector(self, x, coeffs) -> AlgebroidVector:
        c = np.asarray(coeffs, dtype=float)
        if c.shape != (self.fiber_dim,):
            raise BaseMismatch(f"expected {self.fiber_dim} coefficients, got shape {c.shape}")
        return AlgebroidVector(np.asarray(x, dtype=float), c)

    def basis_vector(self, x, j: int) -> AlgebroidVector:
        c = np.zeros(self.fiber_dim)
        c[j] = 1.0
        return AlgebroidVector(np.asarray(x, dtype=float), c)

    def covector(self, x, coeffs) -> AlgebroidCovector:
        return AlgebroidCovector(np.asarray(x, dtype=float), np.asarray(coeffs, dtype=float))

    def composable(self, g, h) -> bool:
        return self.base_distance(self.beta(g), self.alpha(h)) <= self.tol.compose_tol

    def flatten(self, g) -> np.ndarray:
        return np.asarray(g, dtype=float).reshape(-1)

    def unflatten(self, values) -> np.ndarray:
        return np.asarray(values, dtype=float).reshape(self.element_shape)

    def __repr__(self):
        return f"<{type(self).__name__} {self.spec}>"


class PairGroupoid(Groupoid):
    """Pair groupoid M x M: alpha(q1, q2) = q1, beta = q2, (q1,q2)(q2,q3) = (q1,q3)."""

    def __init__(self, manifold, tol: Tolerances = DEFAULT_TOL):
        super().__init__(tol)
        self.manifold = manifold
        self.fiber_dim = manifold.dim
        self.base_shape = manifold.shape
        self.element_shape = (2,) + manifold.shape
        self.spec = f"pair:{manifold.name}"

    def alpha(self, g):
        return np.asarray(g)[0]

    def beta(self, g):
        return np.asarray(g)[1]

    def base_distance(self, x, y) -> float:
        return self.manifold.distance(x, y)

    def compose(self, g, h):
        d = self.base_distance(self.beta(g), self.alpha(h))
        if d > self.tol.compose_tol:
            raise NotComposable(f"beta(g) and alpha(h) differ by {d:.3g}")
        return np.stack([self.alpha(g), self.beta(h)])

    def inverse(self, g):
        g = np.asarray(g)
        return np.stack([g[1], g[0]])

    def identity(self, x):
        x = np.asarray(x, dtype=float)
        return np.stack([x, x])

    def unit_defect(self, g) -> float:
        return self.base_distance(self.alpha(g), self.beta(g))

    def alpha_curve(self, x, v, t: float):
        x = np.asarray(x, dtype=float)
        return np.stack([x, self.manifold.retract(x, as_coeffs(v), t)])

    def edge_from_potentials(self, p, q):
        return np.stack([np.asarray(p, dtype=float), np.asarray(q, dtype=float)])

    def vertex_from_potential(self, p):
        return np.asarray(p, dtype=float)

    def retract(self, p, coeffs, t=1.0):
        return self.manifold.retract(p, coeffs, t)

    def potential_difference(self, p, q):
        return self.manifold.difference(p, q)

    def random_potential(self, rng, scale=1.0):
        return self.manifold.random(rng, scale)

    def random_element(self, rng, scale=1.0):
        return np.stack([self.manifold.random(rng, scale), self.manifold.random(rng, scale)])


class LieGroupGroupoid(Groupoid):
    """A matrix Lie group regarded as a groupoid over a single point."""

    def __init__(self, group: MatrixGroup, tol: Tolerances | None = None):
        super().__init__(tol or group.tol)
        self.group = group
        self.fiber_dim = group.dim
        self.base_shape = (0,)
        self.element_shape = group.shape
        self.spec = f"group:{group.name}"

    @property
    def unit_point(self):
        return np.zeros(0)

    def alpha(self, g):
        return np.zeros(0)

    def beta(self, g):
        return np.zeros(0)

    def base_distance(self, x, y) -> float:
        return 0.0

    def compose(self, g, h):
        return self.group.compose(g, h)

    def inverse(self, g):
        return self.group.inverse(g)

    def identity(self, x=None):
        return self.group.identity()

    def unit_defect(self, g) -> float:
        return float(np.linalg.norm(np.asarray(g) - self.group.identity()))

    def alpha_curve(self, x, v, t: float):
        return self.group.exp(t * as_coeffs(v))

    def exp(self, coeffs):
        return self.group.exp(coeffs)

    def log(self, g):
        return self.group.log(g)

    def edge_from_potentials(self, p, q):
        return self.group.compose(self.group.inverse(p), q)

    def vertex_from_potential(self, p):
        return np.zeros(0)

    def retract(self, p, coeffs, t=1.0):
        return self.group.retract(p, coeffs, t)

    def potential_difference(self, p, q):
        return self.group.difference(p, q)

    def random_potential(self, rng, scale=1.0):
        return self.group.random(rng, scale)

    def random_element(self, rng, scale=1.0):
        return self.group.random(rng, scale)


def log_group(G: LieGroupGroupoid, g) -> AlgebroidVector:
    """Principal logarithm of a group element as an algebroid vector at the unit."""
    if not isinstance(G, LieGroupGroupoid):
        raise TypeError("log_group is defined for Lie group realizations only")
    return AlgebroidVector(np.zeros(0), G.group.log(g))


def _make_group(name: str, tol: Tolerances) -> MatrixGroup:
    if name == "SO3":
        return SO3(tol)
    m = re.fullmatch(r"GL(\d+)", name)
    if m:
        return GL(int(m.group(1)), tol)
    raise ConfigError(f"unknown matrix group {name!r}")


def parse_groupoid(spec: str, tol: Tolerances = DEFAULT_TOL) -> Groupoid:
    """Build a groupoid from strings like ``pair:R2``, ``pair:SO3``, ``group:GL2``."""
    if not isinstance(spec, str) or ":" not in spec:
        raise ConfigError(f"invalid groupoid spec {spec!r}")
    kind, _, name = spec.partition(":")
    if kind == "pair":
        m = re.fullmatch(r"R(\d+)", name)
        if m:
            n = int(m.group(1))
            if n < 1:
                raise ConfigError(f"invalid groupoid spec {spec!r}")
            return PairGroupoid(EuclideanSpace(n), tol)
        return PairGroupoid(_make_group(name, tol), tol)
    if kind == "group":
        return LieGroupGroupoid(_make_group(name, tol), tol)
    raise ConfigError(f"invalid groupoid spec {spec!r}")
