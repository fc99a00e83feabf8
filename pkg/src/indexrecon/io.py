"""Plain-text file formats.

All floats are written with ``repr`` so that reading a file and writing it
back reproduces it byte for byte.

MESH2D v1   mesh vertices and tagged triangles
ZONES v1    zone label of every D element (global triangle index)
FARFIELD v1 far-field matrix with its direction grids
INDEX v1    zone values of a piecewise-constant index
"""

from __future__ import annotations

import os
from pathlib import Path

import numpy as np

from .forward import DirectionGrid, IndexField
from .mesh import TAG_D, TAG_PML, TriangleMesh, Zoning
from .scattering import FarFieldData


class FormatError(ValueError):
    pass


def _r(x) -> str:
    return repr(float(x))


def _lines(path) -> list[str]:
    with open(path) as fh:
        return fh.read().splitlines()


def _expect(line: str, header: str, path) -> None:
    if line.strip() != header:
        raise FormatError(f"{path}: expected {header!r}, got {line!r}")


# -- meshes ---------------------------------------------------------------

def write_mesh(path, mesh: TriangleMesh) -> None:
    out = ["MESH2D v1", f"{mesh.n_vertices} {mesh.n_triangles}"]
    out += [f"{_r(x)} {_r(y)}" for x, y in mesh.vertices]
    out += [f"{a} {b} {c} {t}" for (a, b, c), t in zip(mesh.triangles, mesh.element_tags)]
    Path(path).write_text("\n".join(out) + "\n")


def read_mesh(path, radius: float | None = None, pml_start: float | None = None) -> TriangleMesh:
    """Read a MESH2D file.

    The format stores no geometry parameters. ``radius`` defaults to the
    largest vertex radius of the D elements, ``pml_start`` to the midpoint
    between the outermost non-PML and innermost PML element centroids.
    """
    lines = _lines(path)
    _expect(lines[0], "MESH2D v1", path)
    try:
        nv, nt = (int(s) for s in lines[1].split())
        verts = np.array([[float(s) for s in ln.split()] for ln in lines[2:2 + nv]])
        rows = np.array([[int(s) for s in ln.split()] for ln in lines[2 + nv:2 + nv + nt]],
                        dtype=int)
    except ValueError as exc:
        raise FormatError(f"{path}: {exc}") from exc
    if verts.shape != (nv, 2) or rows.shape != (nt, 4):
        raise FormatError(f"{path}: counts do not match the header")
    tri, tags = rows[:, :3], rows[:, 3]
    half_width = float(np.abs(verts).max())
    if radius is None:
        radius = float(np.hypot(*verts[tri[tags == TAG_D]].reshape(-1, 2).T).max())
    if pml_start is None:
        c = np.abs(verts[tri].mean(axis=1)).max(axis=1)
        pml_start = 0.5 * (c[tags != TAG_PML].max() + c[tags == TAG_PML].min())
    mesh = TriangleMesh(verts, tri, tags, float(radius), half_width, float(pml_start))
    mesh.validate()
    return mesh


# -- zonings --------------------------------------------------------------

def write_zoning(path, zoning: Zoning) -> None:
    d = zoning.mesh.d_elements
    out = ["ZONES v1", f"{len(d)} {zoning.n_zones}"]
    out += [f"{e} {z}" for e, z in zip(d, zoning.labels)]
    Path(path).write_text("\n".join(out) + "\n")


def read_zoning(path, mesh: TriangleMesh) -> Zoning:
    lines = _lines(path)
    _expect(lines[0], "ZONES v1", path)
    nd, nz = (int(s) for s in lines[1].split())
    pairs = np.array([[int(s) for s in ln.split()] for ln in lines[2:2 + nd]], dtype=int)
    if nd != mesh.n_d or pairs.shape != (nd, 2):
        raise FormatError(f"{path}: zoning does not match the mesh")
    pos = np.full(mesh.n_triangles, -1)
    pos[mesh.d_elements] = np.arange(mesh.n_d)
    local = pos[pairs[:, 0]]
    if np.any(local < 0) or len(np.unique(local)) != nd:
        raise FormatError(f"{path}: element indices are not the D elements")
    labels = np.empty(nd, dtype=int)
    labels[local] = pairs[:, 1]
    return Zoning(labels, nz, mesh)


def write_zoning_history(directory, zonings) -> list[Path]:
    """One ZONES file per refinement loop index: ``zoning_000.txt``, ..."""
    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    for stale in directory.glob("zoning_*.txt"):
        stale.unlink()
    paths = []
    for i, z in enumerate(zonings):
        p = directory / f"zoning_{i:03d}.txt"
        write_zoning(p, z)
        paths.append(p)
    return paths


def read_zoning_history(directory, mesh: TriangleMesh) -> list[Zoning]:
    paths = sorted(Path(directory).glob("zoning_*.txt"))
    return [read_zoning(p, mesh) for p in paths]


def write_selection(path, elements) -> None:
    Path(path).write_text("".join(f"{int(e)}\n" for e in elements))


def read_selection(path) -> np.ndarray:
    return np.array([int(s) for s in _lines(path) if s.strip()], dtype=int)


# -- far fields -----------------------------------------------------------

def _grid_from_angles(angles: np.ndarray) -> DirectionGrid:
    m = len(angles)
    aperture = 2 * np.pi if m == 1 else m * (angles[1] - angles[0])
    if abs(aperture - 2 * np.pi) < 1e-9:
        aperture = 2 * np.pi
    return DirectionGrid(angles, np.full(m, aperture / m), float(angles[0]), float(aperture))


def write_farfield(path, data: FarFieldData) -> None:
    out = ["FARFIELD v1", f"{_r(data.k)} {len(data.grid_e)} {len(data.grid_m)}"]
    out += [_r(a) for a in data.grid_e.angles]
    out += [_r(a) for a in data.grid_m.angles]
    for row in data.values:
        out.append(" ".join(f"{_r(v.real)} {_r(v.imag)}" for v in row))
    Path(path).write_text("\n".join(out) + "\n")


def read_farfield(path) -> FarFieldData:
    """Read a FARFIELD file; weights are rebuilt from the uniform spacing."""
    lines = _lines(path)
    _expect(lines[0], "FARFIELD v1", path)
    head = lines[1].split()
    k, me, mm = float(head[0]), int(head[1]), int(head[2])
    ang_e = np.array([float(s) for s in lines[2:2 + me]])
    ang_m = np.array([float(s) for s in lines[2 + me:2 + me + mm]])
    body = lines[2 + me + mm:2 + me + 2 * mm]
    vals = np.array([[float(s) for s in ln.split()] for ln in body])
    if vals.shape != (mm, 2 * me):
        raise FormatError(f"{path}: value block does not match the header")
    values = vals[:, 0::2] + 1j * vals[:, 1::2]
    return FarFieldData(values, _grid_from_angles(ang_e), _grid_from_angles(ang_m), k)


# -- index fields ---------------------------------------------------------

def write_index(path, field: IndexField) -> None:
    out = ["INDEX v1", f"{field.zoning.n_zones} {int(field.real)}"]
    out += [f"{_r(v.real)} {_r(v.imag)}" for v in field.eta]
    Path(path).write_text("\n".join(out) + "\n")


def read_index(path, zoning: Zoning) -> IndexField:
    lines = _lines(path)
    _expect(lines[0], "INDEX v1", path)
    n, real = (int(s) for s in lines[1].split())
    if n != zoning.n_zones:
        raise FormatError(f"{path}: {n} values for {zoning.n_zones} zones")
    v = np.array([[float(s) for s in ln.split()] for ln in lines[2:2 + n]])
    return IndexField(zoning, v[:, 0] + 1j * v[:, 1], bool(real))


def ensure_dir(path) -> Path:
    p = Path(path)
    os.makedirs(p, exist_ok=True)
    return p
