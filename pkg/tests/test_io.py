import numpy as np
import pytest

from indexrecon import io
from indexrecon.forward import DirectionGrid, IndexField
from indexrecon.mesh import partition_zones, split_zone
from indexrecon.scattering import FarFieldData


def _round_trip(tmp_path, name, write, read, obj):
    a, b = tmp_path / f"{name}_a.txt", tmp_path / f"{name}_b.txt"
    write(a, obj)
    back = read(a)
    write(b, back)
    assert a.read_bytes() == b.read_bytes()
    return back


def test_mesh_round_trip(tmp_path, coarse_mesh):
    back = _round_trip(tmp_path, "mesh", io.write_mesh, io.read_mesh, coarse_mesh)
    assert np.array_equal(back.vertices, coarse_mesh.vertices)
    assert np.array_equal(back.triangles, coarse_mesh.triangles)
    assert np.array_equal(back.element_tags, coarse_mesh.element_tags)
    assert np.isclose(back.radius, coarse_mesh.radius, atol=1e-12)
    assert back.half_width == coarse_mesh.half_width
    assert coarse_mesh.pml_start - 0.1 < back.pml_start < coarse_mesh.pml_start + 0.1
    lines = (tmp_path / "mesh_a.txt").read_text().splitlines()
    assert lines[0] == "MESH2D v1"
    assert lines[1] == f"{coarse_mesh.n_vertices} {coarse_mesh.n_triangles}"


def test_zoning_round_trip(tmp_path, coarse_mesh):
    z = split_zone(partition_zones(coarse_mesh, 5, seed=1), 2)
    back = _round_trip(tmp_path, "zones", io.write_zoning,
                       lambda p: io.read_zoning(p, coarse_mesh), z)
    assert np.array_equal(back.labels, z.labels) and back.n_zones == z.n_zones
    lines = (tmp_path / "zones_a.txt").read_text().splitlines()
    assert lines[:2] == ["ZONES v1", f"{coarse_mesh.n_d} 8"]
    assert int(lines[2].split()[0]) == coarse_mesh.d_elements[0]


def test_zoning_history(tmp_path, coarse_mesh):
    zs = [partition_zones(coarse_mesh, 1)]
    zs.append(split_zone(zs[0], 0))
    paths = io.write_zoning_history(tmp_path / "h", zs)
    assert [p.name for p in paths] == ["zoning_000.txt", "zoning_001.txt"]
    back = io.read_zoning_history(tmp_path / "h", coarse_mesh)
    assert [b.n_zones for b in back] == [1, 4]
    # rewriting a shorter history leaves no stale files behind
    io.write_zoning_history(tmp_path / "h", zs[:1])
    assert [b.n_zones for b in io.read_zoning_history(tmp_path / "h", coarse_mesh)] == [1]


def test_selection_round_trip(tmp_path):
    sel = np.array([3, 17, 250])
    back = _round_trip(tmp_path, "sel", io.write_selection, io.read_selection, sel)
    assert np.array_equal(back, sel)


@pytest.mark.parametrize("grids", [(12, 0.0, 2 * np.pi, 12, 0.0, 2 * np.pi),
                                   (30, 0.0, 2 * np.pi, 25, 0.0, 1.5 * np.pi),
                                   (1, 0.3, 2 * np.pi, 7, 1.0, 2.0)])
def test_farfield_round_trip(tmp_path, rng, grids):
    me, a, b, mm, c, d = grids
    ge, gm = DirectionGrid.uniform(me, a, b), DirectionGrid.uniform(mm, c, d)
    vals = rng.normal(size=(mm, me)) + 1j * rng.normal(size=(mm, me))
    data = FarFieldData(vals, ge, gm, 5.0)
    back = _round_trip(tmp_path, "ff", io.write_farfield, io.read_farfield, data)
    assert np.array_equal(back.values, vals) and back.k == 5.0
    if me > 1:
        assert np.allclose(back.grid_e.weights, ge.weights, rtol=1e-12)
    assert np.allclose(back.grid_m.weights, gm.weights, rtol=1e-12)


def test_index_round_trip(tmp_path, coarse_mesh, rng):
    z = partition_zones(coarse_mesh, 6, seed=0)
    n = IndexField(z, 1.3 + rng.random(6) + 0.1j * rng.random(6))
    back = _round_trip(tmp_path, "idx", io.write_index, lambda p: io.read_index(p, z), n)
    assert np.array_equal(back.eta, n.eta) and back.real == n.real


def test_format_errors(tmp_path, coarse_mesh):
    p = tmp_path / "bad.txt"
    p.write_text("NOT A HEADER\n1 2\n")
    for reader in (io.read_mesh, io.read_farfield, lambda q: io.read_zoning(q, coarse_mesh)):
        with pytest.raises(io.FormatError):
            reader(p)
    p.write_text("FARFIELD v1\n5.0 1 1\n0.0\n0.0\n1.0\n")
    with pytest.raises(io.FormatError):
        io.read_farfield(p)
