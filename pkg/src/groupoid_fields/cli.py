"""Command line entry point: ``run``, ``check``, ``mesh`` and ``gauge`` subcommands."""

from __future__ import annotations

import argparse
import json
import platform
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .checks import run_checks
from .config import build_experiment, load_config, normalize_config
from .errors import ConfigError, GroupoidFieldError, SolverError
from .gauge import gauge_from_field, holonomy, is_flat, make_gauge_field, perturb_edge, random_gauge_field
from .groupoid import EuclideanSpace, LieGroupGroupoid, PairGroupoid
from .lagrangian import action_sum
from .solver import (
    free_vertices,
    multisymplectic_defect,
    residual_norm,
    solve_boundary_value,
    solve_time_march,
)
from . import serialization as ser

EXIT_OK, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2


def _config_from_args(args) -> dict:
    cfg = load_config(args.config) if args.config else normalize_config({})
    if args.seed is not None:
        cfg["seed"] = args.seed
    if args.out is not None:
        cfg["output"]["dir"] = args.out
    return cfg


def _base_dir(args) -> Path:
    return Path(args.config).resolve().parent if args.config else Path.cwd()


def _manifest(cfg, command, status, artifacts, extra=None) -> dict:
    out = {
        "command": command,
        "status": status,
        "seed": cfg["seed"],
        "config": cfg,
        "artifacts": sorted(artifacts),
        "versions": {
            "groupoid_fields": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
    }
    if extra:
        out.update(extra)
    return out


def _outdir(cfg) -> Path:
    out = Path(cfg["output"]["dir"])
    out.mkdir(parents=True, exist_ok=True)
    return out


def _fail(out: Path, cfg, command, artifacts, exc) -> int:
    err = {"error": type(exc).__name__, "message": str(exc)}
    report = getattr(exc, "report", None)
    if report is not None and hasattr(report, "to_dict"):
        err["report"] = report.to_dict()
    ser.write_json(out / "manifest.json", _manifest(cfg, command, "failed", artifacts + ["manifest.json"], err))
    print(json.dumps(err), file=sys.stderr)
    return EXIT_FAIL


# -- run ---------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    exp = build_experiment(cfg, _base_dir(args))
    mesh, G, L, data = exp.mesh, exp.groupoid, exp.lagrangian, exp.data
    scfg = cfg["solver"]
    out = _outdir(cfg)
    figures = bool(cfg["output"]["figures"])
    artifacts = []
    extra = {}
    diagnostics = []
    try:
        if scfg["mode"] == "boundary_value":
            field, report = solve_boundary_value(
                L, mesh, data, newton_tol=scfg.get("newton_tol"), max_iter=scfg["max_iter"],
                jac_h=scfg["jac_h"], workers=args.workers,
            )
            history = report.history
            conv_header = ["iter", "residual", "step"]
            extra["report"] = report.to_dict()
            diagnostics += [("iterations", report.iterations), ("converged", report.converged)]
            check_vertices = free_vertices(mesh)
        elif scfg["mode"] == "time_march":
            nx, _ = mesh.shape
            pots = data.potentials
            rows = ([pots[mesh.vertex_at(i, j)] for i in range(nx)] for j in (0, 1))
            boundary = None
            if scfg["march_boundary"] == "data":
                boundary = lambda i, j: pots[mesh.vertex_at(i, j)]  # noqa: E731
            field, report = solve_time_march(
                L, mesh, tuple(rows), scfg["steps"], G, boundary=boundary,
                newton_tol=scfg.get("newton_tol"), max_iter=scfg["max_iter"], jac_h=scfg["jac_h"],
                workers=args.workers,
            )
            history = report.history
            conv_header = ["row", "iter", "residual", "step"]
            extra["report"] = {"rows_computed": report.rows_computed, "residual_norm": report.residual_norm,
                               "converged": report.converged, "wall_time": report.wall_time}
            diagnostics += [("rows_computed", report.rows_computed)]
            diagnostics += [(f"row_action_{j}", a) for j, a in enumerate(report.row_actions)]
            last = scfg["steps"]
            check_vertices = [u for u in mesh.interior_vertices() if 1 <= mesh.grid_coords(u)[1] <= last]
        else:
            field, history, conv_header = data, [], ["iter", "residual", "step"]
            check_vertices = free_vertices(mesh)
    except SolverError as exc:
        return _fail(out, cfg, "run", artifacts, exc)

    diagnostics.insert(0, ("action", action_sum(L, field, mesh, workers=args.workers)))
    diagnostics.insert(1, ("residual_sup", residual_norm(L, field, mesh, check_vertices)))
    npairs = scfg["multisymplectic_pairs"]
    if npairs and scfg["mode"] == "boundary_value":
        free = set(free_vertices(mesh))
        fixed = [u for u in range(mesh.n_vertices) if u not in free]
        for n in range(npairs):
            g1 = {u: exp.rng.standard_normal(G.fiber_dim) for u in fixed}
            g2 = {u: exp.rng.standard_normal(G.fiber_dim) for u in fixed}
            try:
                d = multisymplectic_defect(L, field, mesh, g1, g2, check_tol=max(1e-8, 10 * extra["report"]["residual_norm"]))
            except GroupoidFieldError as exc:
                return _fail(out, cfg, "run", artifacts, exc)
            diagnostics.append((f"multisymplectic_defect_{n}", d))

    ser.save_field_json(field, out / "field.json")
    ser.save_field_csv(field, out / "field.csv")
    ser.write_csv(out / "convergence.csv", conv_header, history)
    ser.write_csv(out / "diagnostics.csv", ["metric", "value"], diagnostics)
    artifacts += ["field.json", "field.csv", "convergence.csv", "diagnostics.csv"]
    euclid = isinstance(G, PairGroupoid) and isinstance(G.manifold, EuclideanSpace)
    if euclid and mesh.shape is not None:
        for c in range(G.fiber_dim):
            ser.save_field_grid_csv(field, mesh, out / f"grid_c{c}.csv", c)
            artifacts.append(f"grid_c{c}.csv")
    if figures:
        from . import plotting

        plotting.plot_convergence(history, out / "convergence.png")
        artifacts.append("convergence.png")
        if euclid and mesh.shape is not None:
            plotting.plot_field_grid(ser.field_grid(field, mesh, 0), out / "field.png", mesh.spacing)
            artifacts.append("field.png")
        if scfg["mode"] == "time_march" and report.row_actions:
            plotting.plot_series(report.row_actions, out / "row_action.png", "row", "action of row band")
            artifacts.append("row_action.png")
    extra["diagnostics"] = {k: v for k, v in diagnostics}
    ser.write_json(out / "manifest.json", _manifest(cfg, "run", "ok", artifacts + ["manifest.json"], extra))
    print(f"run ok: action={diagnostics[0][1]:.10g} residual_sup={diagnostics[1][1]:.3g} -> {out}")
    return EXIT_OK


# -- check -------------------------------------------------------------------


def cmd_check(args) -> int:
    cfg = _config_from_args(args)
    results = run_checks(cfg["seed"], corrupt=args.corrupt)
    out = _outdir(cfg)
    rows = [(r.name, r.passed, r.value, r.tol, r.detail) for r in results]
    ser.write_csv(out / "checks.csv", ["check", "passed", "value", "tol", "detail"], rows)
    ok = all(r.passed for r in results)
    summary = {r.name: {"passed": r.passed, "value": r.value, "tol": r.tol, "detail": r.detail,
                        "seconds": r.seconds} for r in results}
    ser.write_json(out / "manifest.json", _manifest(cfg, "check", "ok" if ok else "failed",
                                                    ["checks.csv", "manifest.json"], {"checks": summary}))
    for r in results:
        print(f"{'PASS' if r.passed else 'FAIL'} {r.name:<18} value={r.value:.3g} tol={r.tol:g} ({r.detail})")
    return EXIT_OK if ok else EXIT_FAIL


# -- mesh --------------------------------------------------------------------


def _mesh_summary(mesh) -> dict:
    return {
        "kind": mesh.kind,
        "k": mesh.k,
        "vertices": mesh.n_vertices,
        "faces": mesh.n_faces,
        "undirected_edges": sum(1 for u, v in mesh.edges if u < v),
        "boundary_vertices": len(mesh.boundary_vertices),
        "interior_vertices": len(mesh.interior_vertices()),
    }


def cmd_mesh(args) -> int:
    if args.inspect:
        try:
            mesh = ser.load_mesh(args.inspect)
        except (GroupoidFieldError, OSError, ValueError) as exc:
            raise ConfigError(f"cannot load mesh: {exc}") from exc
        print(json.dumps(_mesh_summary(mesh), indent=2))
        return EXIT_OK
    cfg = _config_from_args(args)
    exp = build_experiment(cfg, _base_dir(args), need_lagrangian=False)
    out = _outdir(cfg)
    ser.save_mesh(exp.mesh, out / "mesh.json")
    artifacts = ["mesh.json"]
    if cfg["output"]["figures"]:
        from . import plotting

        plotting.plot_mesh(exp.mesh, out / "mesh.png")
        artifacts.append("mesh.png")
    summary = _mesh_summary(exp.mesh)
    ser.write_json(out / "manifest.json", _manifest(cfg, "mesh", "ok", artifacts + ["manifest.json"], {"mesh": summary}))
    print(json.dumps(summary, indent=2))
    return EXIT_OK


# -- gauge -------------------------------------------------------------------


def cmd_gauge(args) -> int:
    cfg = _config_from_args(args)
    exp = build_experiment(cfg, _base_dir(args), need_lagrangian=False)
    G, mesh = exp.groupoid, exp.mesh
    if not isinstance(G, LieGroupGroupoid):
        raise ConfigError("gauge runs need a Lie group realization (group:SO3, group:GLn)")
    gcfg = cfg["gauge"]
    source = gcfg["source"]
    if source == "field":
        psi = gauge_from_field(exp.data, mesh)
    elif source == "random":
        psi = random_gauge_field(G, mesh, exp.rng, float(cfg["data"].get("scale", 1.0)))
    elif source == "identity":
        psi = make_gauge_field(G, mesh, {e: G.group.identity() for e in mesh.edges})
    else:
        raise ConfigError(f"unknown gauge source {source!r}")
    if "perturb_edge" in gcfg:
        edge = tuple(int(v) for v in gcfg["perturb_edge"])
        if edge not in mesh.edges or edge[0] == edge[1]:
            raise ConfigError(f"gauge.perturb_edge {edge} is not an edge of the mesh")
        scale = float(gcfg.get("perturb_scale", 0.1))
        psi = perturb_edge(psi, edge, scale * exp.rng.standard_normal(G.fiber_dim))
    paths = []
    for p in gcfg["paths"]:
        p = [int(v) for v in p]
        if not p or any((a, b) not in mesh.edges for a, b in zip(p[:-1], p[1:])):
            raise ConfigError(f"gauge path {p} is not a path in the mesh")
        paths.append(p)

    out = _outdir(cfg)
    report = is_flat(psi, mesh)
    ser.save_flatness_csv(report, out / "flatness.csv")
    ser.save_gauge(psi, out / "gauge.npz")
    artifacts = ["flatness.csv", "gauge.npz"]
    if paths:
        rows = []
        for n, p in enumerate(paths):
            hol = holonomy(psi, p, mesh)
            rows.append([n, " ".join(map(str, p)), float(np.linalg.norm(hol - G.group.identity()))] + list(hol.reshape(-1)))
        width = int(np.prod(G.element_shape))
        ser.write_csv(out / "holonomy.csv", ["path_id", "vertices", "distance_to_identity"] + [f"h{n}" for n in range(width)], rows)
        artifacts.append("holonomy.csv")
    if cfg["output"]["figures"]:
        from . import plotting

        plotting.plot_flatness(mesh, report.defects, out / "flatness.png")
        artifacts.append("flatness.png")
    extra = {"is_flat": report.flat, "worst_defect": report.worst,
             "defective_faces": report.defective_faces(G.tol.cycle_tol)}
    ser.write_json(out / "manifest.json", _manifest(cfg, "gauge", "ok", artifacts + ["manifest.json"], extra))
    print(f"is_flat={report.flat} worst_defect={report.worst:.3g} defective_faces={extra['defective_faces']}")
    return EXIT_OK


# -- entry -------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="groupoid-fields", description=__doc__)
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="TOML experiment file")
        p.add_argument("--seed", type=int, help="override the config seed")
        p.add_argument("--workers", type=int, default=1, help="threads for residual and Jacobian assembly")
        p.add_argument("--out", help="output directory (overrides [output].dir)")

    p = sub.add_parser("run", help="solve the field equations and write artifacts")
    common(p)
    p.set_defaults(func=cmd_run)
    p = sub.add_parser("check", help="run the property suite")
    common(p)
    p.add_argument("--corrupt", action="store_true", help="use a field fixture that breaks the unit axiom")
    p.set_defaults(func=cmd_check)
    p = sub.add_parser("mesh", help="generate or inspect a mesh")
    common(p)
    p.add_argument("--inspect", help="summarize an existing mesh JSON file")
    p.set_defaults(func=cmd_mesh)
    p = sub.add_parser("gauge", help="flatness and holonomy of a gauge field")
    common(p)
    p.set_defaults(func=cmd_gauge)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if getattr(args, "workers", 1) < 1:
        print(json.dumps({"error": "ConfigError", "message": "--workers must be >= 1"}), file=sys.stderr)
        return EXIT_CONFIG
    try:
        return args.func(args)
    except ConfigError as exc:
        print(json.dumps({"error": "ConfigError", "message": str(exc)}), file=sys.stderr)
        return EXIT_CONFIG
    except GroupoidFieldError as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return EXIT_FAIL


if __name__ == "__main__":
    sys.exit(main())
