import numpy as np
import pytest

from groupoid_fields import build_square_mesh, build_triangular_mesh, is_flat, parse_groupoid
from groupoid_fields import serialization as ser
from groupoid_fields.errors import FieldError
from groupoid_fields.field import random_field
from groupoid_fields.gauge import random_gauge_field


def test_fmt_round_trips_floats(rng):
    for x in rng.standard_normal(200) * 10.0 ** rng.integers(-12, 12, 200):
        assert float(ser.fmt(x)) == x
    assert ser.fmt(True) == "true"
    assert ser.fmt(np.int64(7)) == "7"


def test_csv_round_trip(tmp_path, rng):
    vals = rng.standard_normal((5, 3))
    ser.write_csv(tmp_path / "a.csv", ["x", "y", "z"], vals)
    header, rows = ser.read_csv(tmp_path / "a.csv")
    assert header == ["x", "y", "z"]
    np.testing.assert_array_equal(np.array(rows, dtype=float), vals)


def test_json_handles_numpy(tmp_path):
    obj = {"a": np.arange(3), "b": np.float64(0.1), "c": (np.bool_(True), np.int32(2)), 4: None}
    ser.write_json(tmp_path / "o.json", obj)
    assert ser.read_json(tmp_path / "o.json") == {"a": [0, 1, 2], "b": 0.1, "c": [True, 2], "4": None}


@pytest.mark.parametrize("builder", [build_square_mesh, build_triangular_mesh])
def test_mesh_round_trip(builder, tmp_path):
    mesh = builder(4, 3, 0.5, 0.25)
    back = ser.load_mesh(ser.save_mesh(mesh, tmp_path / "m.json"))
    assert back.faces == mesh.faces and back.edges == mesh.edges
    assert back.boundary_vertices == mesh.boundary_vertices
    np.testing.assert_array_equal(back.positions, mesh.positions)


@pytest.mark.parametrize("spec", ["pair:R2", "group:SO3", "group:GL2", "pair:SO3"])
def test_field_json_round_trip(spec, tmp_path, rng):
    mesh = build_square_mesh(3, 3)
    G = parse_groupoid(spec)
    field = random_field(G, mesh, rng, 0.5)
    back = ser.load_field_json(ser.save_field_json(field, tmp_path / "f.json"))
    assert back.groupoid.spec == G.spec
    for e, g in field.edge_values.items():
        np.testing.assert_array_equal(back.edge_values[e], g)
    for a, b in zip(back.vertex_values, field.vertex_values):
        np.testing.assert_array_equal(a, b)


def test_field_csv_layout(tmp_path, rng):
    mesh = build_square_mesh(3, 3)
    G = parse_groupoid("pair:R1")
    field = random_field(G, mesh, rng)
    header, rows = ser.read_csv(ser.save_field_csv(field, tmp_path / "f.csv"))
    assert header == ["kind", "u", "v", "c0", "c1"]
    assert sum(r[0] == "vertex" for r in rows) == mesh.n_vertices
    assert sum(r[0] == "edge" for r in rows) == len(field.edge_values)
    assert float(rows[0][3]) == float(field.vertex_values[0][0])


def test_field_grid(tmp_path, rng):
    mesh = build_square_mesh(4, 3)
    field = random_field(parse_groupoid("pair:R1"), mesh, rng)
    grid = ser.field_grid(field, mesh)
    assert grid.shape == (3, 4)
    assert grid[2, 1] == field.vertex_values[mesh.vertex_at(1, 2)][0]
    with pytest.raises(FieldError):
        ser.field_grid(random_field(parse_groupoid("group:SO3"), mesh, rng), mesh)


def test_gauge_npz_and_flatness_csv(tmp_path, rng):
    mesh = build_square_mesh(3, 3)
    psi = random_gauge_field(parse_groupoid("group:SO3"), mesh, rng, 0.5)
    back = ser.load_gauge(ser.save_gauge(psi, tmp_path / "g.npz"))
    assert back.groupoid.spec == "group:SO3"
    for e, g in psi.edge_values.items():
        np.testing.assert_array_equal(back[e], g)
    rep = is_flat(psi, mesh)
    header, rows = ser.read_csv(ser.save_flatness_csv(rep, tmp_path / "flat.csv"))
    assert header == ["face", "defect"] and len(rows) == mesh.n_faces
    assert [float(r[1]) for r in rows] == rep.defects
