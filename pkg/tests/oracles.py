"""Independent reference computations used by the tests.

Nothing here calls into the package's derivative or solver code: partial
derivatives use complex steps on hand-written formulas, rotations use the
Rodrigues formula, and minimization is plain gradient descent.
"""

import numpy as np


def complex_step_grad(f, x, h=1e-30):
    """Gradient of a real-analytic function of a real array via complex steps."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        xc = x.astype(complex)
        xc[idx] += 1j * h
        g[idx] = np.imag(f(xc)) / h
    return g


def quad_lhat(q, weights, mass=0.0, quartic=0.0, scale=1.0):
    """1/2 sum_i w_i |q_{i+1} - q_i|^2 - (scale/k) sum_i (m^2 |q_i|^2/2 + lam |q_i|^4/4)."""
    k = len(weights)
    total = 0.0
    for i in range(k):
        d = q[(i + 1) % k] - q[i]
        total = total + 0.5 * weights[i] * np.sum(d * d)
    for i in range(k):
        r2 = np.sum(q[i] * q[i])
        total = total - scale * (0.5 * mass**2 * r2 + 0.25 * quartic * r2 * r2) / k
    return total


def rodrigues(w):
    w = np.asarray(w, dtype=float)
    th = np.linalg.norm(w)
    K = np.array([[0, -w[2], w[1]], [w[2], 0, -w[0]], [-w[1], w[0], 0]])
    if th < 1e-15:
        return np.eye(3) + K
    return np.eye(3) + np.sin(th) / th * K + (1 - np.cos(th)) / th**2 * K @ K


def rotation_angle_axis(R):
    th = np.arccos(np.clip((np.trace(R) - 1) / 2, -1, 1))
    if th < 1e-12:
        return np.zeros(3)
    w = np.array([R[2, 1] - R[1, 2], R[0, 2] - R[2, 0], R[1, 0] - R[0, 1]]) / (2 * np.sin(th))
    return th * w


def grid_action(Q, lhat):
    """Action of a square-grid field Q[j, i] with faces ordered BL, BR, TR, TL."""
    ny, nx = Q.shape[:2]
    total = 0.0
    for j in range(ny - 1):
        for i in range(nx - 1):
            q = np.array([Q[j, i], Q[j, i + 1], Q[j + 1, i + 1], Q[j + 1, i]])
            total += lhat(q)
    return total


def gradient_descent(fun, x0, lr=0.05, tol=1e-10, max_iter=200000, h=1e-4):
    """Minimize ``fun`` with central-difference gradients and a fixed step.

    Central differences are exact for quadratics, so a coarse ``h`` keeps
    roundoff low.
    """
    x = np.array(x0, dtype=float)
    for _ in range(max_iter):
        g = np.zeros_like(x)
        for n in range(x.size):
            e = np.zeros_like(x)
            e.flat[n] = h
            g.flat[n] = (fun(x + e) - fun(x - e)) / (2 * h)
        if np.max(np.abs(g)) < tol:
            return x
        x -= lr * g
    return x
