"""Matplotlib figures written to files (Agg backend, no display needed)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.collections import PolyCollection  # noqa: E402

DPI = 120


def _save(fig, path) -> Path:
    path = Path(path)
    fig.tight_layout()
    fig.savefig(path, dpi=DPI, metadata={"Software": None})
    plt.close(fig)
    return path


def plot_mesh(mesh, path, values=None, label: str = "", title: str = "") -> Path:
    """Faces of the mesh, optionally colored by a per-face value; boundary vertices marked."""
    fig, ax = plt.subplots(figsize=(5, 5))
    polys = [mesh.positions[list(f)] for f in mesh.faces]
    coll = PolyCollection(polys, edgecolors="k", linewidths=0.6)
    if values is None:
        coll.set_facecolor("#dde6f0")
    else:
        coll.set_array(np.asarray(values, dtype=float))
        coll.set_cmap("magma")
        fig.colorbar(coll, ax=ax, label=label)
    ax.add_collection(coll)
    for u, v in mesh.extra_edges:
        p = mesh.positions[[u, v]]
        ax.plot(p[:, 0], p[:, 1], color="k", lw=0.6, ls=":")
    b = sorted(mesh.boundary_vertices)
    ax.scatter(*mesh.positions.T, s=10, color="0.4", zorder=3)
    ax.scatter(*mesh.positions[b].T, s=14, color="tab:red", zorder=4, label="boundary")
    ax.set_aspect("equal")
    ax.autoscale_view()
    ax.legend(loc="upper right", fontsize=8)
    ax.set_title(title or f"{mesh.kind} mesh, k={mesh.k}")
    return _save(fig, path)


def plot_field_grid(grid, path, spacing=(1.0, 1.0), title: str = "vertex values", label: str = "q") -> Path:
    grid = np.asarray(grid, dtype=float)
    ny, nx = grid.shape
    dx, dy = spacing
    fig, ax = plt.subplots(figsize=(5.5, 4.5))
    im = ax.imshow(grid, origin="lower", aspect="auto", cmap="viridis",
                   extent=(-dx / 2, (nx - 0.5) * dx, -dy / 2, (ny - 0.5) * dy))
    fig.colorbar(im, ax=ax, label=label)
    ax.set_xlabel("x")
    ax.set_ylabel("y")
    ax.set_title(title)
    return _save(fig, path)


def plot_convergence(history, path, title: str = "Newton convergence") -> Path:
    """Residual norm against iteration; ``history`` rows end with (iter, residual, step)."""
    rows = [tuple(h)[-3:] for h in history]
    fig, ax = plt.subplots(figsize=(5, 3.5))
    if rows:
        res = np.array([r[1] for r in rows], dtype=float)
        res = np.where(res > 0, res, np.nan)
        ax.semilogy(np.arange(len(rows)), res, marker="o", ms=3)
    ax.set_xlabel("Newton iteration (cumulative)")
    ax.set_ylabel("sup residual")
    ax.grid(True, which="both", alpha=0.3)
    ax.set_title(title)
    return _save(fig, path)


def plot_series(values, path, xlabel: str, ylabel: str, title: str = "") -> Path:
    fig, ax = plt.subplots(figsize=(5, 3.5))
    ax.plot(np.arange(len(values)), np.asarray(values, dtype=float), marker=".")
    ax.set_xlabel(xlabel)
    ax.set_ylabel(ylabel)
    ax.grid(True, alpha=0.3)
    if title:
        ax.set_title(title)
    return _save(fig, path)


def plot_flatness(mesh, defects, path, title: str = "plaquette defects") -> Path:
    d = np.asarray(defects, dtype=float)
    return plot_mesh(mesh, path, values=np.log10(np.maximum(d, 1e-17)), label="log10 |F - I|", title=title)
