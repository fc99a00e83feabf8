"""Triangulated disc-in-box geometry, zone partitions and probe points.

The computational domain is the square ``[-b, b]^2`` with
``b = radius + buffer + pml_thickness``. Elements are tagged

* ``TAG_D`` (0): inside the inhomogeneity disc,
* ``TAG_BUFFER`` (1): free space between the disc and the PML,
* ``TAG_PML`` (2): the absorbing layer.

Meshes are produced from a structured point layout (concentric rings in
the disc, a hexagonal lattice outside) that is relaxed by a spring
smoother and triangulated with Delaunay. Everything is deterministic for a
given seed.
"""

from __future__ import annotations

import heapq
import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
from scipy.cluster.vq import kmeans2
from scipy.spatial import Delaunay, cKDTree

logger = logging.getLogger(__name__)

TAG_D = 0
TAG_BUFFER = 1
TAG_PML = 2

# Lattice spacing relative to the nominal size lambda/epw. Equilateral
# triangles of side 0.83 h put ~2.7e3 elements in the unit disc at k=5,
# epw=20, i.e. the resolution of the reference reconstruction mesh.
SPACING_FACTOR = 0.83
MIN_ANGLE_DEG = 20.0
MIN_ZONE_SIZE = 4
MIN_SPLIT_SIZE = 16
PARTITION_ATTEMPTS = 8


class MeshError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class TriangleMesh:
    """Conforming P1 triangulation.

    Attributes
    ----------
    vertices : (n_vertices, 2) float array
    triangles : (n_triangles, 3) int array, counter-clockwise
    element_tags : (n_triangles,) int array of TAG_* labels
    radius : radius of the inhomogeneity disc
    half_width : half width of the square box
    pml_start : |x| or |y| beyond which the PML begins
    """

    vertices: np.ndarray
    triangles: np.ndarray
    element_tags: np.ndarray
    radius: float
    half_width: float
    pml_start: float

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @cached_property
    def d_elements(self) -> np.ndarray:
        """Global indices of the triangles tagged D, ascending."""
        return np.flatnonzero(self.element_tags == TAG_D)

    @property
    def n_d(self) -> int:
        return len(self.d_elements)

    @cached_property
    def areas(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        e1 = p[:, 1] - p[:, 0]
        e2 = p[:, 2] - p[:, 0]
        return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])

    @cached_property
    def centroids(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)

    @cached_property
    def boundary_vertices(self) -> np.ndarray:
        """Vertices lying on the outer box boundary."""
        edges, counts = self._edge_counts
        bnd = edges[counts == 1]
        return np.unique(bnd)

    @cached_property
    def _edge_counts(self):
        t = self.triangles
        e = np.concatenate([t[:, [0, 1]], t[:, [1, 2]], t[:, [2, 0]]])
        e.sort(axis=1)
        return np.unique(e, axis=0, return_counts=True)

    @cached_property
    def d_adjacency(self) -> list[np.ndarray]:
        """Edge neighbours among D elements, in D-local numbering."""
        tri = self.triangles[self.d_elements]
        n = len(tri)
        e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
        e.sort(axis=1)
        owner = np.tile(np.arange(n), 3)
        key = e[:, 0].astype(np.int64) * self.n_vertices + e[:, 1]
        order = np.argsort(key, kind="stable")
        key, owner = key[order], owner[order]
        same = np.flatnonzero(key[1:] == key[:-1])
        a, b = owner[same], owner[same + 1]
        nbrs: list[list[int]] = [[] for _ in range(n)]
        for i, j in zip(a.tolist(), b.tolist()):
            nbrs[i].append(j)
            nbrs[j].append(i)
        return [np.array(sorted(x), dtype=int) for x in nbrs]

    def min_angles_deg(self) -> np.ndarray:
        p = self.vertices[self.triangles]
        out = np.full(self.n_triangles, 180.0)
        for i in range(3):
            a = p[:, (i + 1) % 3] - p[:, i]
            b = p[:, (i + 2) % 3] - p[:, i]
            cosang = np.einsum("ij,ij->i", a, b) / (
                np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1)
            )
            out = np.minimum(out, np.degrees(np.arccos(np.clip(cosang, -1, 1))))
        return out

    def locate(self, points: np.ndarray) -> np.ndarray:
        """Owning triangle of each point, -1 when outside the mesh."""
        points = np.atleast_2d(np.asarray(points, dtype=float))
        kk = min(12, self.n_triangles)
        _, cand = self._centroid_tree.query(points, k=kk)
        cand = np.atleast_2d(cand)
        owner = np.full(len(points), -1, dtype=int)
        for i, pt in enumerate(points):
            for t in cand[i]:
                if np.all(barycentric(self.vertices[self.triangles[t]], pt) >= -1e-12):
                    owner[i] = t
                    break
            else:
                lam = np.array(
                    [barycentric(self.vertices[tri], pt) for tri in self.triangles]
                )
                hit = np.flatnonzero(np.all(lam >= -1e-12, axis=1))
                if len(hit):
                    owner[i] = hit[0]
        return owner

    @cached_property
    def _centroid_tree(self) -> cKDTree:
        return cKDTree(self.centroids)

    def validate(self) -> None:
        """Check conformity, orientation and the minimum-angle floor."""
        if np.any(self.areas <= 0):
            raise MeshError("non-positive triangle area")
        edges, counts = self._edge_counts
        if np.any(counts > 2):
            raise MeshError("edge shared by more than two triangles")
        bnd = self.vertices[edges[counts == 1]]
        on_box = np.isclose(np.abs(bnd).max(axis=2), self.half_width, atol=1e-9)
        if not np.all(on_box):
            raise MeshError("open edge inside the domain (non-conforming mesh)")
        worst = self.min_angles_deg().min()
        if worst < MIN_ANGLE_DEG:
            raise MeshError(f"minimum angle {worst:.2f} deg below {MIN_ANGLE_DEG}")


def barycentric(tri: np.ndarray, pt: np.ndarray) -> np.ndarray:
    """Barycentric coordinates of ``pt`` in the triangle ``tri`` (3x2)."""
    t = np.column_stack([tri[1] - tri[0], tri[2] - tri[0]])
    l12 = np.linalg.solve(t, np.asarray(pt) - tri[0])
    return np.array([1.0 - l12.sum(), l12[0], l12[1]])


def _ring_points(radius: float, spacing: float, rng: np.random.Generator):
    """Center point plus concentric rings; the last ring lies on the circle."""
    dr = spacing * np.sqrt(3.0) / 2.0
    m = max(1, int(round(radius / dr)))
    pts = [np.zeros((1, 2))]
    for j in range(1, m + 1):
        r = radius * j / m
        nj = max(6, int(round(2 * np.pi * r / spacing)))
        phase = rng.uniform(0.0, 2 * np.pi / nj)
        ang = phase + 2 * np.pi * np.arange(nj) / nj
        pts.append(r * np.column_stack([np.cos(ang), np.sin(ang)]))
    circle = pts[-1]
    return np.vstack(pts[:-1]), circle


def _box_points(b: float, spacing: float) -> np.ndarray:
    nb = int(np.ceil(2 * b / spacing))
    t = np.linspace(-b, b, nb + 1)
    side = [
        np.column_stack([t, np.full_like(t, -b)]),
        np.column_stack([t, np.full_like(t, b)]),
        np.column_stack([np.full_like(t[1:-1], -b), t[1:-1]]),
        np.column_stack([np.full_like(t[1:-1], b), t[1:-1]]),
    ]
    return np.vstack(side)


def _exterior_lattice(radius, b, spacing, rng):
    dy = spacing * np.sqrt(3.0) / 2.0
    shift = rng.uniform(0.0, 1.0, size=2) * np.array([spacing, dy])
    ny = int(np.ceil(2 * b / dy)) + 2
    nx = int(np.ceil(2 * b / spacing)) + 2
    jj, ii = np.mgrid[0:ny, 0:nx]
    x = -b - spacing + shift[0] + ii * spacing + 0.5 * spacing * (jj % 2)
    y = -b - dy + shift[1] + jj * dy
    p = np.column_stack([x.ravel(), y.ravel()])
    r = np.hypot(p[:, 0], p[:, 1])
    keep = (r > radius + 0.6 * spacing) & (np.abs(p).max(axis=1) < b - 0.6 * spacing)
    return p[keep]


def _bars(tri: np.ndarray) -> np.ndarray:
    e = np.concatenate([tri[:, [0, 1]], tri[:, [1, 2]], tri[:, [2, 0]]])
    e.sort(axis=1)
    base = int(e.max()) + 1
    key = np.unique(e[:, 0].astype(np.int64) * base + e[:, 1])
    return np.column_stack([key // base, key % base])


def _relax(p, n_fixed, radius, b, spacing, iters):
    """Spring smoothing of the free points (indices >= n_fixed).

    Free points stay outside the disc and inside the box.
    """
    fscale, dt = 1.2, 0.2
    for _ in range(iters):
        tri = Delaunay(p).simplices
        bars = _bars(tri)
        vec = p[bars[:, 0]] - p[bars[:, 1]]
        L = np.hypot(vec[:, 0], vec[:, 1])
        L0 = fscale * np.sqrt(np.sum(L**2) / len(L))
        L0 = min(L0, fscale * spacing)
        F = np.maximum(L0 - L, 0.0)
        fv = (F / L)[:, None] * vec
        ftot = np.zeros_like(p)
        np.add.at(ftot, bars[:, 0], fv)
        np.add.at(ftot, bars[:, 1], -fv)
        ftot[:n_fixed] = 0.0
        p = p + dt * ftot
        free = p[n_fixed:]
        r = np.hypot(free[:, 0], free[:, 1])
        rmin = radius + 0.45 * spacing
        inside = r < rmin
        free[inside] *= (rmin / r[inside])[:, None]
        lim = b - 0.45 * spacing
        np.clip(free, -lim, lim, out=free)
        p[n_fixed:] = free
    return p


def build_disc_mesh(
    radius: float = 1.0,
    k: float = 5.0,
    elements_per_wavelength: float = 20.0,
    pml_thickness: float | None = None,
    buffer: float | None = None,
    seed: int = 0,
    relax_iters: int = 10,
) -> TriangleMesh:
    """Mesh a disc of ``radius`` inside a PML-padded square box.

    The nominal element size is ``h = 2*pi/(k*elements_per_wavelength)``.
    Defaults: ``buffer = lambda/2`` and ``pml_thickness = lambda``.
    """
    if radius <= 0 or k <= 0:
        raise MeshError("radius and k must be positive")
    if elements_per_wavelength < 10:
        raise MeshError("elements_per_wavelength must be >= 10")
    lam = 2 * np.pi / k
    buffer = lam / 2 if buffer is None else buffer
    pml_thickness = lam if pml_thickness is None else pml_thickness
    if buffer <= 0 or pml_thickness <= 0:
        raise MeshError("buffer and pml_thickness must be positive")

    rng = np.random.default_rng(seed)
    spacing = SPACING_FACTOR * lam / elements_per_wavelength
    b = radius + buffer + pml_thickness
    interior, circle = _ring_points(radius, spacing, rng)
    box = _box_points(b, spacing)
    lattice = _exterior_lattice(radius, b, spacing, rng)
    fixed = np.vstack([interior, circle, box])
    p = np.vstack([fixed, lattice])
    p = _relax(p, len(fixed), radius, b, spacing, relax_iters)

    tri = Delaunay(p).simplices
    v = p[tri]
    area = 0.5 * (
        (v[:, 1, 0] - v[:, 0, 0]) * (v[:, 2, 1] - v[:, 0, 1])
        - (v[:, 1, 1] - v[:, 0, 1]) * (v[:, 2, 0] - v[:, 0, 0])
    )
    tri = tri[np.abs(area) > 1e-10 * spacing**2]
    area = area[np.abs(area) > 1e-10 * spacing**2]
    neg = area < 0
    tri[neg] = tri[neg][:, [0, 2, 1]]
    # canonical element order: by centroid, for reproducible numbering
    c = p[tri].mean(axis=1)
    order = np.lexsort((c[:, 0], c[:, 1]))
    tri = tri[order]
    c = c[order]

    tags = np.full(len(tri), TAG_BUFFER, dtype=int)
    pml_start = radius + buffer
    tags[np.abs(c).max(axis=1) > pml_start] = TAG_PML
    tags[np.hypot(c[:, 0], c[:, 1]) < radius] = TAG_D

    mesh = TriangleMesh(
        vertices=p,
        triangles=tri.astype(int),
        element_tags=tags,
        radius=float(radius),
        half_width=float(b),
        pml_start=float(pml_start),
    )
    mesh.validate()
    logger.info(
        "mesh: %d vertices, %d triangles, %d in D, min angle %.1f",
        mesh.n_vertices, mesh.n_triangles, mesh.n_d, mesh.min_angles_deg().min(),
    )
    return mesh


# ---------------------------------------------------------------------------
# zones
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class Zoning:
    """Partition of the D elements into zones.

    ``labels[j]`` is the zone of the j-th D element (D-local numbering,
    i.e. position in ``mesh.d_elements``).
    """

    labels: np.ndarray
    n_zones: int
    mesh: TriangleMesh = field(repr=False)

    @cached_property
    def zones(self) -> list[np.ndarray]:
        order = np.argsort(self.labels, kind="stable")
        bounds = np.searchsorted(self.labels[order], np.arange(self.n_zones + 1))
        return [order[bounds[i]: bounds[i + 1]] for i in range(self.n_zones)]

    @cached_property
    def sizes(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.n_zones)

    @cached_property
    def zone_areas(self) -> np.ndarray:
        a = self.mesh.areas[self.mesh.d_elements]
        return np.bincount(self.labels, weights=a, minlength=self.n_zones)

    def zone_of_element(self, d_index: int) -> int:
        return int(self.labels[d_index])

    def is_connected(self, i: int) -> bool:
        return _is_connected(self.zones[i], self.mesh.d_adjacency)

    def validate(self, require_connected: bool = True) -> None:
        if len(self.labels) != self.mesh.n_d:
            raise MeshError("zoning does not cover D")
        if self.n_zones < 1 or np.any(self.sizes == 0):
            raise MeshError("empty zone")
        if self.labels.min() < 0 or self.labels.max() >= self.n_zones:
            raise MeshError("zone label out of range")
        if require_connected:
            for i in range(self.n_zones):
                if not self.is_connected(i):
                    raise MeshError(f"zone {i} is not edge-connected")


def _is_connected(members: np.ndarray, adj: list[np.ndarray]) -> bool:
    if len(members) <= 1:
        return len(members) == 1
    inside = set(members.tolist())
    seen = {int(members[0])}
    stack = [int(members[0])]
    while stack:
        e = stack.pop()
        for nb in adj[e]:
            nb = int(nb)
            if nb in inside and nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(inside)


def _grow_regions(elements, centers, seeds, adj, pts, balanced):
    """Multi-source region growing on the element adjacency graph.

    Each region expands from its seed through edge neighbours, so regions
    are connected by construction. With ``balanced`` the smallest region
    that can still grow claims first; otherwise claims are ordered by
    distance to the region center. Returns a label per element of
    ``elements`` (-1 where unreachable).
    """
    pos = {int(e): i for i, e in enumerate(elements)}
    label = np.full(len(elements), -1, dtype=int)
    size = np.zeros(len(seeds), dtype=int)
    heaps: list[list] = [[] for _ in seeds]
    for r, s in enumerate(seeds):
        label[pos[s]] = r
        size[r] = 1
    def push_nbrs(r, e):
        for nb in adj[e]:
            j = pos.get(int(nb))
            if j is not None and label[j] < 0:
                d = float(np.sum((pts[j] - centers[r]) ** 2))
                heapq.heappush(heaps[r], (d, j))
    for r, s in enumerate(seeds):
        push_nbrs(r, s)
    if not balanced:
        glob = []
        for r in range(len(seeds)):
            for d, j in heaps[r]:
                glob.append((d, r, j))
        heapq.heapify(glob)
        while glob:
            d, r, j = heapq.heappop(glob)
            if label[j] >= 0:
                continue
            label[j] = r
            size[r] += 1
            e = int(elements[j])
            for nb in adj[e]:
                jj = pos.get(int(nb))
                if jj is not None and label[jj] < 0:
                    heapq.heappush(glob, (float(np.sum((pts[jj] - centers[r]) ** 2)), r, jj))
        return label
    active = set(range(len(seeds)))
    while active:
        r = min(active, key=lambda q: (size[q], q))
        h = heaps[r]
        while h and label[h[0][1]] >= 0:
            heapq.heappop(h)
        if not h:
            active.discard(r)
            continue
        _, j = heapq.heappop(h)
        label[j] = r
        size[r] += 1
        push_nbrs(r, int(elements[j]))
    return label


def _rebalance(label, n, adj, ratio=3.0):
    """Move boundary elements between adjacent zones until
    ``max size <= ratio * min size``, keeping every zone connected.

    The smallest zone takes an element from its largest neighbour; when it
    cannot, the largest zone gives one to its smallest neighbour.
    """
    label = label.copy()
    members = [set(np.flatnonzero(label == r).tolist()) for r in range(n)]
    sizes = np.array([len(m) for m in members])

    def neighbours(r):
        out = {}
        for e in members[r]:
            for nb in adj[e]:
                q = label[nb]
                if q != r:
                    out.setdefault(int(q), []).append(int(nb))
        return out

    def try_move(e, src, dst):
        rest = members[src] - {e}
        if not rest or not _is_connected(np.fromiter(rest, int), adj):
            return False
        members[src].discard(e)
        members[dst].add(e)
        label[e] = dst
        sizes[src] -= 1
        sizes[dst] += 1
        return True

    for _ in range(20 * len(label)):
        if sizes.max() <= ratio * sizes.min():
            break
        moved = False
        s = int(np.argmin(sizes))
        for q, cands in sorted(neighbours(s).items(), key=lambda kv: (-sizes[kv[0]], kv[0])):
            if sizes[q] <= sizes[s] + 1:
                break
            if any(try_move(e, q, s) for e in sorted(set(cands))):
                moved = True
                break
        if moved:
            continue
        b = int(np.argmax(sizes))
        for q in sorted(neighbours(b), key=lambda q: (sizes[q], q)):
            if sizes[q] + 1 >= sizes[b]:
                break
            edge = sorted({e for e in members[b] if any(label[nb] == q for nb in adj[e])})
            if any(try_move(e, b, q) for e in edge):
                moved = True
                break
        if not moved:
            break
    if sizes.max() > ratio * sizes.min():
        label = _merge_split(label, n, adj, ratio)
    return label


def _bisect(members: np.ndarray, adj) -> tuple[np.ndarray, np.ndarray]:
    """Cut a BFS spanning tree of a connected set at its most balanced edge;
    both sides are connected."""
    inside = set(members.tolist())
    root = int(members[0])
    parent, order = {root: -1}, [root]
    for e in order:
        for nb in adj[e]:
            nb = int(nb)
            if nb in inside and nb not in parent:
                parent[nb] = e
                order.append(nb)
    sub = dict.fromkeys(order, 1)
    for e in reversed(order[1:]):
        sub[parent[e]] += sub[e]
    total = len(order)
    cut = min(order[1:], key=lambda e: (abs(2 * sub[e] - total), e))
    children: dict[int, list[int]] = {}
    for e in order[1:]:
        children.setdefault(parent[e], []).append(e)
    part, stack = [], [cut]
    while stack:
        e = stack.pop()
        part.append(e)
        stack.extend(children.get(e, []))
    a = np.array(sorted(part))
    return a, np.setdiff1d(members, a)


def _merge_split(label, n, adj, ratio):
    """Merge the smallest zone into its smallest neighbour and bisect the
    largest zone, keeping the zone count; stops when balanced or stalled."""
    label = label.copy()
    best = label.copy()
    best_key = None
    for _ in range(4 * n):
        sizes = np.bincount(label, minlength=n)
        key = (sizes.max() / sizes.min(), sizes.max() - sizes.min())
        if best_key is None or key < best_key:
            best, best_key = label.copy(), key
        if sizes.max() <= ratio * sizes.min():
            break
        s = int(np.argmin(sizes))
        nbrs = {int(label[nb]) for e in np.flatnonzero(label == s) for nb in adj[e]} - {s}
        if not nbrs:
            break
        q = min(nbrs, key=lambda r: (sizes[r], r))
        label[label == s] = q
        sizes = np.bincount(label, minlength=n)
        # bisect the largest zone whose halves both have >= 2 elements
        other = None
        for b in np.argsort(-sizes, kind="stable")[: max(8, n // 4)]:
            if sizes[b] < 2:
                break
            part, rest = _bisect(np.flatnonzero(label == b), adj)
            if other is None or min(len(part), len(rest)) >= 2:
                other = rest
                if min(len(part), len(rest)) >= 2:
                    break
        if other is None:
            break
        label[other] = s
    return best


def _kmeans_seeds(pts, n, rng_seed, members):
    if n == len(pts):
        return np.arange(len(pts)), pts.copy()
    rng = np.random.default_rng(rng_seed)
    centers, _ = kmeans2(pts, n, minit="++", seed=rng, iter=20)
    # distinct seed element nearest to each center
    tree = cKDTree(pts)
    taken = np.zeros(len(pts), dtype=bool)
    seeds = np.empty(n, dtype=int)
    kq = min(len(pts), 32)
    for r in range(n):
        _, cand = tree.query(centers[r], k=kq)
        cand = np.atleast_1d(cand)
        free = cand[~taken[cand]]
        if len(free) == 0:
            free = np.flatnonzero(~taken)
            free = free[np.argsort(np.sum((pts[free] - centers[r]) ** 2, axis=1))]
        seeds[r] = free[0]
        taken[free[0]] = True
    return seeds, centers


def partition_zones(mesh: TriangleMesh, n_zones: int, seed: int = 0) -> Zoning:
    """Split D into ``n_zones`` connected, roughly equal-size zones.

    k-means on element centroids gives the zone centers; zones are then
    grown from the element nearest to each center along element edges.
    """
    n_d = mesh.n_d
    if not 1 <= n_zones <= n_d:
        raise MeshError(f"number of zones must be in [1, {n_d}]")
    if n_zones == n_d:
        return Zoning(np.arange(n_d), n_d, mesh)
    if n_zones == 1:
        return Zoning(np.zeros(n_d, dtype=int), 1, mesh)
    pts = mesh.centroids[mesh.d_elements]
    elements = np.arange(n_d)
    best, best_ratio = None, np.inf
    for attempt in range(PARTITION_ATTEMPTS):
        label = _partition_once(mesh, pts, elements, n_zones, seed * 1009 + attempt)
        sizes = np.bincount(label, minlength=n_zones)
        ratio = sizes.max() / sizes.min() if sizes.min() > 0 else np.inf
        if ratio < best_ratio:
            best, best_ratio = label, ratio
        if ratio <= 3:
            break
    else:
        logger.warning("partition into %d zones: best size ratio %.2f", n_zones, best_ratio)
    label = best
    return Zoning(_canonical_labels(label, n_zones), n_zones, mesh)


def _partition_once(mesh, pts, elements, n_zones, rng_seed):
    seeds, _ = _kmeans_seeds(pts, n_zones, rng_seed, elements)
    adj = mesh.d_adjacency
    label = _grow_regions(elements, pts[seeds], seeds, adj, pts, balanced=False)
    sizes = np.bincount(label[label >= 0], minlength=n_zones)
    if sizes.max() > 3 * sizes.min():
        label = _grow_regions(elements, pts[seeds], seeds, adj, pts, balanced=True)
    if np.any(label < 0):
        raise MeshError("D is not edge-connected")
    sizes = np.bincount(label, minlength=n_zones)
    if sizes.max() > 3 * sizes.min():
        label = _rebalance(label, n_zones, adj)
    return label


def _canonical_labels(label: np.ndarray, n: int) -> np.ndarray:
    """Renumber zones by first appearance, for reproducible numbering."""
    first = np.full(n, len(label))
    np.minimum.at(first, label, np.arange(len(label)))
    rank = np.empty(n, dtype=int)
    rank[np.argsort(first, kind="stable")] = np.arange(n)
    return rank[label]


def split_zone(zoning: Zoning, zone_index: int, seed: int = 0) -> Zoning:
    """Replace one zone by four sub-zones of at least four elements each.

    The first sub-zone keeps ``zone_index``; the three others are
    appended at the end, so existing zone numbers are unchanged.
    """
    if not 0 <= zone_index < zoning.n_zones:
        raise MeshError("zone index out of range")
    members = zoning.zones[zone_index]
    if len(members) <= MIN_SPLIT_SIZE:
        raise MeshError(
            f"zone {zone_index} has {len(members)} elements; "
            f"splitting needs more than {MIN_SPLIT_SIZE}"
        )
    mesh = zoning.mesh
    pts = mesh.centroids[mesh.d_elements[members]]
    adj = mesh.d_adjacency
    sub = None
    for attempt in range(40):
        seeds, centers = _kmeans_seeds(pts, 4, seed * 7919 + attempt, members)
        lab = _grow_regions(members, pts[seeds], members[seeds], adj, pts, balanced=True)
        if np.any(lab < 0):
            # parts of a disconnected zone not reached from any seed
            miss = np.flatnonzero(lab < 0)
            got = np.flatnonzero(lab >= 0)
            tree = cKDTree(pts[got])
            _, nn = tree.query(pts[miss])
            lab[miss] = lab[got[np.atleast_1d(nn)]]
        if np.bincount(lab, minlength=4).min() >= MIN_ZONE_SIZE:
            sub = lab
            break
    if sub is None:
        # ordering along the principal axis always meets the size floor
        c = pts - pts.mean(axis=0)
        _, _, vt = np.linalg.svd(c, full_matrices=False)
        order = np.argsort(c @ vt[0], kind="stable")
        sub = np.empty(len(members), dtype=int)
        for r, chunk in enumerate(np.array_split(order, 4)):
            sub[chunk] = r
    # canonical order: the sub-zone seen first keeps the original index
    first = np.full(4, len(sub))
    np.minimum.at(first, sub, np.arange(len(sub)))
    rank = np.empty(4, dtype=int)
    rank[np.argsort(first, kind="stable")] = np.arange(4)
    sub = rank[sub]
    labels = zoning.labels.copy()
    new_ids = np.array([zone_index, zoning.n_zones, zoning.n_zones + 1, zoning.n_zones + 2])
    labels[members] = new_ids[sub]
    return Zoning(labels, zoning.n_zones + 3, mesh)


def zoning_from_groups(mesh: TriangleMesh, groups: list[np.ndarray]) -> Zoning:
    """Zoning whose zones are the given D-local element groups."""
    labels = np.full(mesh.n_d, -1, dtype=int)
    for i, g in enumerate(groups):
        labels[np.asarray(g, dtype=int)] = i
    if np.any(labels < 0):
        raise MeshError("groups do not cover D")
    return Zoning(labels, len(groups), mesh)


# ---------------------------------------------------------------------------
# probes
# ---------------------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class ProbePoints:
    points: np.ndarray
    owners: np.ndarray  # global triangle index per point

    def __len__(self) -> int:
        return len(self.points)


def probe_points(mesh: TriangleMesh) -> ProbePoints:
    """One probe per D element, at its centroid."""
    d = mesh.d_elements
    return ProbePoints(points=mesh.centroids[d].copy(), owners=d.copy())
