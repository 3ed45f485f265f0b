"""Experiment configuration: TOML parsing, validation and object construction.

Everything that can fail on bad input is resolved here, before a run writes
any file, so configuration mistakes never leave partial artifacts behind.
"""

from __future__ import annotations

import copy
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .errors import ConfigError, GroupoidFieldError
from .field import field_from_potentials, potentials_of
from .groupoid import EuclideanSpace, LieGroupGroupoid, PairGroupoid, Tolerances, parse_groupoid
from .lagrangian import make_lagrangian
from .mesh import build_square_mesh, build_triangular_mesh

DEFAULTS = {
    "seed": 0,
    "mesh": {"type": "square", "nx": 6, "ny": 6, "dx": 1.0, "dy": 1.0},
    "groupoid": {"spec": "pair:R1"},
    "lagrangian": {"name": "laplace", "params": {}},
    "solver": {
        "mode": "boundary_value",
        "max_iter": 50,
        "jac_h": 1e-6,
        "steps": 0,
        "march_boundary": "hold",
        "multisymplectic_pairs": 0,
    },
    "data": {"kind": "random", "scale": 1.0},
    "gauge": {"source": "field", "paths": []},
    "output": {"dir": "out", "figures": True},
}

_ALLOWED = {
    "mesh": {"type", "nx", "ny", "dx", "dy", "path"},
    "groupoid": {"spec"},
    "lagrangian": {"name", "params"},
    "solver": {"mode", "newton_tol", "max_iter", "jac_h", "steps", "march_boundary", "multisymplectic_pairs"},
    "data": {"kind", "value", "expression", "path", "scale"},
    "gauge": {"source", "perturb_edge", "perturb_scale", "paths"},
    "output": {"dir", "figures"},
}

_EXPR_NAMES = {
    name: getattr(np, name)
    for name in ("sin", "cos", "tan", "exp", "log", "sqrt", "tanh", "sinh", "cosh", "arctan", "abs", "pi")
}


def _merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, val in override.items():
        if isinstance(val, dict) and isinstance(out.get(key), dict):
            out[key] = _merge(out[key], val)
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path) -> dict:
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError(f"config file {path} not found") from None
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"config file {path} is not valid TOML: {exc}") from exc
    return normalize_config(raw)


def normalize_config(raw: dict) -> dict:
    unknown = set(raw) - set(_ALLOWED) - {"seed"}
    if unknown:
        raise ConfigError(f"unknown config sections: {sorted(unknown)}")
    for section, keys in _ALLOWED.items():
        sub = raw.get(section, {})
        if not isinstance(sub, dict):
            raise ConfigError(f"[{section}] must be a table")
        bad = set(sub) - keys
        if bad:
            raise ConfigError(f"unknown keys in [{section}]: {sorted(bad)}")
    cfg = _merge(DEFAULTS, raw)
    if not isinstance(cfg["seed"], int) or isinstance(cfg["seed"], bool):
        raise ConfigError("seed must be an integer")
    return cfg


@dataclass
class Experiment:
    """Resolved objects built from a configuration."""

    config: dict
    mesh: object
    groupoid: object
    lagrangian: object
    data: object
    rng: np.random.Generator
    base_dir: Path


def _build_mesh(spec: dict, base_dir: Path):
    kind = spec["type"]
    try:
        if kind in ("square", "triangular"):
            nx, ny = int(spec["nx"]), int(spec["ny"])
            dx, dy = float(spec["dx"]), float(spec["dy"])
            builder = build_square_mesh if kind == "square" else build_triangular_mesh
            return builder(nx, ny, dx, dy)
        if kind == "file":
            from .serialization import load_mesh

            return load_mesh(base_dir / spec["path"])
    except KeyError as exc:
        raise ConfigError(f"[mesh] needs key {exc}") from None
    except (GroupoidFieldError, OSError, ValueError, TypeError) as exc:
        raise ConfigError(f"invalid mesh: {exc}") from exc
    raise ConfigError(f"unknown mesh type {kind!r}")


def _as_potential(G, value):
    v = np.atleast_1d(np.asarray(value, dtype=float))
    if v.shape != (G.fiber_dim,):
        raise ConfigError(f"data values need {G.fiber_dim} components, got {v.size}")
    if isinstance(G, LieGroupGroupoid):
        return G.group.exp(v)
    return G.retract(G.manifold.identity() if hasattr(G.manifold, "identity") else np.zeros(G.fiber_dim), v)


def _build_data(spec: dict, G, mesh, rng, base_dir: Path):
    kind = spec["kind"]
    if kind == "random":
        scale = float(spec.get("scale", 1.0))
        return field_from_potentials(G, mesh, [G.random_potential(rng, scale) for _ in range(mesh.n_vertices)])
    if kind == "constant":
        p = _as_potential(G, spec.get("value", np.zeros(G.fiber_dim)))
        return field_from_potentials(G, mesh, [p] * mesh.n_vertices)
    if kind == "function":
        expr = spec.get("expression")
        if not isinstance(expr, str):
            raise ConfigError("[data] kind='function' needs an 'expression' string")
        try:
            code = compile(expr, "<data.expression>", "eval")
        except SyntaxError as exc:
            raise ConfigError(f"bad data expression: {exc}") from exc
        pots = []
        for x, y in mesh.positions:
            try:
                val = eval(code, {"__builtins__": {}}, dict(_EXPR_NAMES, x=float(x), y=float(y)))
            except Exception as exc:
                raise ConfigError(f"data expression failed at ({x}, {y}): {exc}") from exc
            pots.append(_as_potential(G, val))
        return field_from_potentials(G, mesh, pots)
    if kind == "file":
        from .serialization import load_field_json

        try:
            field = load_field_json(base_dir / spec["path"])
        except KeyError:
            raise ConfigError("[data] kind='file' needs a 'path'") from None
        except (OSError, ValueError) as exc:
            raise ConfigError(f"cannot read data field: {exc}") from exc
        if field.groupoid.spec != G.spec:
            raise ConfigError(f"data field lives on {field.groupoid.spec}, config says {G.spec}")
        return field_from_potentials(G, mesh, potentials_of(field, mesh))
    raise ConfigError(f"unknown data kind {kind!r}")


def build_experiment(cfg: dict, base_dir=".", need_lagrangian: bool = True) -> Experiment:
    base_dir = Path(base_dir)
    rng = np.random.default_rng(cfg["seed"])
    mesh = _build_mesh(cfg["mesh"], base_dir)
    G = parse_groupoid(cfg["groupoid"]["spec"], Tolerances())
    L = None
    if need_lagrangian:
        lag = cfg["lagrangian"]
        params = lag.get("params", {})
        if not isinstance(params, dict):
            raise ConfigError("[lagrangian] params must be a table")
        L = make_lagrangian(lag["name"], G, mesh.k, params)
    solver = cfg["solver"]
    if solver["mode"] not in ("boundary_value", "time_march", "none"):
        raise ConfigError(f"unknown solver mode {solver['mode']!r}")
    if solver["march_boundary"] not in ("hold", "data"):
        raise ConfigError("solver.march_boundary must be 'hold' or 'data'")
    if solver["mode"] == "time_march":
        if mesh.kind != "square":
            raise ConfigError("time marching needs a square mesh")
        if not 0 <= int(solver["steps"]) <= mesh.shape[1] - 2:
            raise ConfigError(f"solver.steps must lie in 0..{mesh.shape[1] - 2}")
    if solver["multisymplectic_pairs"] and not (isinstance(G, PairGroupoid) and isinstance(G.manifold, EuclideanSpace)):
        # the check re-solves to 1e-13, which needs exact Lagrangian derivatives
        raise ConfigError("multisymplectic diagnostics are available for pair:Rn groupoids")
    for key in ("max_iter", "multisymplectic_pairs", "steps"):
        if not isinstance(solver[key], int) or solver[key] < 0:
            raise ConfigError(f"solver.{key} must be a non-negative integer")
    try:
        data = _build_data(cfg["data"], G, mesh, rng, base_dir)
    except GroupoidFieldError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"invalid data: {exc}") from exc
    return Experiment(cfg, mesh, G, L, data, rng, base_dir)
