"""Triangulated search domain with terrain elevation.

The horizontal search domain is a 2D triangle mesh whose nodes carry the
terrain height as a third coordinate.  Holes in the mesh are no-fly zones.
An optional DEM raster can accompany the mesh for line-of-sight probes that
cross holes.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.interpolate import RegularGridInterpolator
from scipy.spatial import cKDTree


class MeshParseError(ValueError):
    """Malformed mesh or raster file."""


class MeshValidationError(ValueError):
    """Mesh violates a topological invariant."""


class DomainError(ValueError):
    """Query point lies outside the search domain."""


class SpecError(ValueError):
    """Invalid UAV specification."""


OUTER_TAG = 1


@dataclass(frozen=True, eq=False)
class BoundaryLoop:
    nodes: np.ndarray  # closed loop, first node not repeated
    tag: int
    is_hole: bool


@dataclass(eq=False)
class TerrainMesh:
    """Triangle mesh of the horizontal domain with per-node elevation.

    ``nodes`` is an (N, 3) array of x, y, z_T.  Triangles are stored
    counter-clockwise.  ``boundary_edges`` holds every edge used by exactly
    one triangle, and ``boundary_tags`` tags each of them (``OUTER_TAG`` for
    the outer boundary, any other value for a hole).
    """

    nodes: np.ndarray
    triangles: np.ndarray
    boundary_edges: np.ndarray
    boundary_tags: np.ndarray
    loops: list[BoundaryLoop]
    _locator: "_GridLocator" = field(init=False, repr=False)

    def __post_init__(self):
        self.nodes = np.asarray(self.nodes, dtype=float)
        self.triangles = np.asarray(self.triangles, dtype=np.int64)
        self._locator = _GridLocator(self.xy, self.triangles)
        self._kdtree = None
        # per-triangle affine data: grad of barycentric coordinates
        p = self.xy[self.triangles]
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        self.areas = 0.5 * (d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0])
        # rows: d(lambda_k)/dx, d(lambda_k)/dy for k = 0, 1, 2
        inv2a = 1.0 / (2.0 * self.areas)
        gx = np.stack([p[:, 1, 1] - p[:, 2, 1], p[:, 2, 1] - p[:, 0, 1], p[:, 0, 1] - p[:, 1, 1]], axis=1)
        gy = np.stack([p[:, 2, 0] - p[:, 1, 0], p[:, 0, 0] - p[:, 2, 0], p[:, 1, 0] - p[:, 0, 0]], axis=1)
        self.shape_gradients = np.stack([gx * inv2a[:, None], gy * inv2a[:, None]], axis=2)

    @property
    def xy(self) -> np.ndarray:
        return self.nodes[:, :2]

    @property
    def z(self) -> np.ndarray:
        return self.nodes[:, 2]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_elements(self) -> int:
        return len(self.triangles)

    @property
    def area(self) -> float:
        return float(self.areas.sum())

    @property
    def boundary_segments(self) -> np.ndarray:
        """(K, 2, 2) array of boundary segment endpoints."""
        return self.xy[self.boundary_edges]

    @property
    def hole_segments(self) -> np.ndarray:
        return self.xy[self.boundary_edges[self.boundary_tags != OUTER_TAG]]

    @property
    def kdtree(self) -> cKDTree:
        if self._kdtree is None:
            self._kdtree = cKDTree(self.xy)
        return self._kdtree

    def locate(self, points) -> tuple[np.ndarray, np.ndarray]:
        """Containing triangle index (-1 outside) and barycentric coordinates."""
        return self._locator.locate(np.atleast_2d(np.asarray(points, dtype=float)))

    def contains(self, points) -> np.ndarray:
        return self.locate(points)[0] >= 0

    def interpolate(self, values: np.ndarray, points) -> np.ndarray:
        """Linear interpolation of nodal ``values``; NaN outside the domain."""
        tri, bary = self.locate(points)
        out = np.full(len(tri), np.nan)
        ok = tri >= 0
        out[ok] = np.einsum("ij,ij->i", values[self.triangles[tri[ok]]], bary[ok])
        return out

    def triangle_gradient(self, values: np.ndarray) -> np.ndarray:
        """(M, 2) constant gradient of the linear interpolant on each triangle."""
        return np.einsum("tkd,tk->td", self.shape_gradients, values[self.triangles])


class _GridLocator:
    """Uniform background grid bucketing triangles by bounding box."""

    def __init__(self, xy: np.ndarray, triangles: np.ndarray):
        self.xy = xy
        self.triangles = triangles
        lo = xy.min(axis=0)
        hi = xy.max(axis=0)
        span = np.maximum(hi - lo, 1e-12)
        ncell = max(1, len(triangles) // 2)
        aspect = span[0] / span[1]
        nx = max(1, int(round(math.sqrt(ncell * aspect))))
        ny = max(1, int(round(ncell / nx)))
        self.lo = lo
        self.shape = np.array([nx, ny])
        self.cell = span / self.shape
        p = xy[triangles]
        tlo = self._cell_of(p.min(axis=1))
        thi = self._cell_of(p.max(axis=1))
        buckets: list[list[int]] = [[] for _ in range(nx * ny)]
        for t in range(len(triangles)):
            for i in range(tlo[t, 0], thi[t, 0] + 1):
                for j in range(tlo[t, 1], thi[t, 1] + 1):
                    buckets[i * ny + j].append(t)
        width = max(len(b) for b in buckets)
        self.table = np.full((nx * ny, width), -1, dtype=np.int64)
        for k, b in enumerate(buckets):
            self.table[k, : len(b)] = b  # triangle indices ascending

        # per-triangle affine map to barycentric coordinates
        d1 = p[:, 1] - p[:, 0]
        d2 = p[:, 2] - p[:, 0]
        det = d1[:, 0] * d2[:, 1] - d1[:, 1] * d2[:, 0]
        self.origin = p[:, 0]
        self.inv = np.stack(
            [np.stack([d2[:, 1], -d2[:, 0]], axis=1), np.stack([-d1[:, 1], d1[:, 0]], axis=1)], axis=1
        ) / det[:, None, None]
        self.tol = 1e-10

    def _cell_of(self, pts: np.ndarray) -> np.ndarray:
        idx = np.floor((pts - self.lo) / self.cell).astype(np.int64)
        return np.clip(idx, 0, self.shape - 1)

    def locate(self, pts: np.ndarray):
        n = len(pts)
        cells = self._cell_of(pts)
        inside_box = np.all((pts >= self.lo - self.cell * 1e-9) & (pts <= self.lo + self.cell * self.shape + self.cell * 1e-9), axis=1)
        cand = self.table[cells[:, 0] * self.shape[1] + cells[:, 1]]  # (n, w)
        valid = cand >= 0
        cs = np.where(valid, cand, 0)
        d = pts[:, None, :] - self.origin[cs]
        l1 = np.einsum("nwj,nwj->nw", self.inv[cs, 0], d)
        l2 = np.einsum("nwj,nwj->nw", self.inv[cs, 1], d)
        l0 = 1.0 - l1 - l2
        hit = valid & (l0 >= -self.tol) & (l1 >= -self.tol) & (l2 >= -self.tol) & inside_box[:, None]
        first = np.argmax(hit, axis=1)
        found = hit[np.arange(n), first]
        tri = np.where(found, cand[np.arange(n), first], -1)
        bary = np.stack([l0, l1, l2], axis=2)[np.arange(n), first]
        bary = np.clip(bary, 0.0, None)
        bary /= bary.sum(axis=1, keepdims=True)
        bary[~found] = np.nan
        return tri, bary


# ---------------------------------------------------------------- building


def build_mesh(nodes, triangles, edge_tags: dict[tuple[int, int], int] | None = None) -> TerrainMesh:
    """Validate topology, orient triangles CCW and extract tagged boundary loops.

    ``edge_tags`` maps sorted node-index pairs to physical tags.  Untagged
    boundaries are classified geometrically: the loop enclosing the largest
    area is the outer boundary, every other loop is a hole.
    """
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 2 or nodes.shape[1] != 3:
        raise MeshValidationError("nodes must be an (N, 3) array of x, y, z")
    if not np.all(np.isfinite(nodes)):
        raise MeshValidationError("non-finite node coordinate")
    tris = np.array(triangles, dtype=np.int64).reshape(-1, 3)
    if len(tris) == 0:
        raise MeshValidationError("mesh has no triangles")
    n = len(nodes)
    bad = np.nonzero((tris < 0) | (tris >= n))
    if bad[0].size:
        t = int(bad[0][0])
        raise MeshValidationError(f"triangle {t} references node index {int(tris[t, bad[1][0]])} beyond node count {n}")
    for t in np.nonzero((tris[:, 0] == tris[:, 1]) | (tris[:, 1] == tris[:, 2]) | (tris[:, 0] == tris[:, 2]))[0][:1]:
        raise MeshValidationError(f"triangle {int(t)} repeats a node")

    p = nodes[tris, :2]
    signed = 0.5 * ((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 1, 1] - p[:, 0, 1]) * (p[:, 2, 0] - p[:, 0, 0]))
    scale = np.max(np.ptp(nodes[:, :2], axis=0)) ** 2
    degenerate = np.abs(signed) <= 1e-14 * scale
    if degenerate.any():
        raise MeshValidationError(f"triangle {int(np.argmax(degenerate))} has zero area")
    flip = signed < 0
    tris[flip] = tris[flip][:, [0, 2, 1]]

    edges = np.sort(np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]]), axis=1)
    uniq, counts = np.unique(edges, axis=0, return_counts=True)
    over = counts > 2
    if over.any():
        a, b = uniq[np.argmax(over)]
        raise MeshValidationError(f"edge ({a}, {b}) is shared by {counts[np.argmax(over)]} triangles")
    # boundary edges, oriented as they appear in their (CCW) triangle
    directed = np.concatenate([tris[:, [0, 1]], tris[:, [1, 2]], tris[:, [2, 0]]])
    bset = {tuple(e) for e in uniq[counts == 1]}
    bdir = np.array([e for e in directed if (min(e), max(e)) in bset], dtype=np.int64).reshape(-1, 2)

    loops = _trace_loops(bdir, nodes[:, :2])
    edge_tags = edge_tags or {}
    loop_objs: list[BoundaryLoop] = []
    if edge_tags:
        for lp in loops:
            tags = [edge_tags.get((min(a, b), max(a, b))) for a, b in zip(lp, np.roll(lp, -1))]
            known = [t for t in tags if t is not None]
            if not known:
                raise MeshValidationError(f"boundary loop through node {int(lp[0])} has no tagged line elements")
            tag = max(set(known), key=known.count)
            loop_objs.append(BoundaryLoop(lp, tag, tag != OUTER_TAG))
        if sum(not lo.is_hole for lo in loop_objs) != 1:
            raise MeshValidationError("exactly one boundary loop must carry the outer-boundary tag")
    else:
        areas = [abs(_polygon_area(nodes[lp, :2])) for lp in loops]
        outer = int(np.argmax(areas))
        hole_tag = OUTER_TAG + 1
        for k, lp in enumerate(loops):
            if k == outer:
                loop_objs.append(BoundaryLoop(lp, OUTER_TAG, False))
            else:
                loop_objs.append(BoundaryLoop(lp, hole_tag, True))
                hole_tag += 1

    bedges = np.concatenate([np.stack([lo.nodes, np.roll(lo.nodes, -1)], axis=1) for lo in loop_objs])
    btags = np.concatenate([np.full(len(lo.nodes), lo.tag) for lo in loop_objs])
    for lo in loop_objs:
        _check_simple(nodes[lo.nodes, :2], lo.tag)
    return TerrainMesh(nodes, tris, bedges, btags, loop_objs)


def _polygon_area(p: np.ndarray) -> float:
    q = np.roll(p, -1, axis=0)
    return 0.5 * float(np.sum(p[:, 0] * q[:, 1] - q[:, 0] * p[:, 1]))


def _trace_loops(bdir: np.ndarray, xy: np.ndarray) -> list[np.ndarray]:
    succ: dict[int, list[int]] = {}
    for a, b in bdir:
        succ.setdefault(int(a), []).append(int(b))
    for a, nxt in succ.items():
        if len(nxt) > 1:
            raise MeshValidationError(f"boundary is pinched at node {a}")
    unused = set(succ)
    loops = []
    while unused:
        start = min(unused)
        lp = [start]
        unused.discard(start)
        cur = succ[start][0]
        while cur != start:
            if cur not in unused:
                raise MeshValidationError(f"boundary loop through node {start} is not closed")
            lp.append(cur)
            unused.discard(cur)
            cur = succ[cur][0]
        loops.append(np.array(lp, dtype=np.int64))
    return loops


def _check_simple(poly: np.ndarray, tag: int) -> None:
    """Reject self-intersecting loops (O(K^2), vectorised per edge)."""
    a = poly
    b = np.roll(poly, -1, axis=0)
    k = len(a)
    if k < 3:
        raise MeshValidationError(f"boundary loop with tag {tag} has fewer than 3 edges")
    if k > 4000:
        return
    for i in range(k):
        j = np.arange(i + 2, k)
        if i == 0:
            j = j[j != k - 1]
        if j.size == 0:
            continue
        if _segments_cross(a[i], b[i], a[j], b[j]).any():
            raise MeshValidationError(f"boundary loop with tag {tag} self-intersects at edge {i}")


def _segments_cross(p1, p2, q1, q2) -> np.ndarray:
    def orient(a, b, c):
        return (b[..., 0] - a[..., 0]) * (c[..., 1] - a[..., 1]) - (b[..., 1] - a[..., 1]) * (c[..., 0] - a[..., 0])

    d1 = orient(q1, q2, p1)
    d2 = orient(q1, q2, p2)
    d3 = orient(p1, p2, q1)
    d4 = orient(p1, p2, q2)
    return (d1 * d2 < 0) & (d3 * d4 < 0)


# ---------------------------------------------------------------- file I/O


def load_mesh(path) -> TerrainMesh:
    """Read a Gmsh MSH 2.2 ASCII file (triangles + tagged boundary lines)."""
    lines = Path(path).read_text().splitlines()
    i = 0
    node_ids: dict[int, int] = {}
    coords: list[tuple[float, float, float]] = []
    tris: list[tuple[int, int, int]] = []
    raw_edges: list[tuple[int, int, int]] = []
    tri_lines: list[int] = []
    seen_nodes = seen_elements = False

    def fail(lineno, msg):
        raise MeshParseError(f"{path}: line {lineno + 1}: {msg}")

    while i < len(lines):
        tok = lines[i].strip()
        if tok == "$MeshFormat":
            parts = lines[i + 1].split() if i + 1 < len(lines) else []
            if len(parts) < 2 or not parts[0].startswith("2"):
                fail(i + 1, f"unsupported mesh format {' '.join(parts)!r}, expected 2.2 ASCII")
            if parts[1] != "0":
                fail(i + 1, "binary MSH files are not supported")
            i += 2
        elif tok == "$Nodes":
            seen_nodes = True
            try:
                count = int(lines[i + 1].split()[0])
            except (IndexError, ValueError):
                fail(i + 1, "expected node count")
            for k in range(count):
                ln = i + 2 + k
                parts = lines[ln].split() if ln < len(lines) else []
                if len(parts) < 4:
                    fail(ln, "expected 'id x y z'")
                try:
                    node_ids[int(parts[0])] = len(coords)
                    coords.append((float(parts[1]), float(parts[2]), float(parts[3])))
                except ValueError:
                    fail(ln, f"non-numeric node record {lines[ln]!r}")
            i += 2 + count
        elif tok == "$Elements":
            seen_elements = True
            try:
                count = int(lines[i + 1].split()[0])
            except (IndexError, ValueError):
                fail(i + 1, "expected element count")
            for k in range(count):
                ln = i + 2 + k
                try:
                    parts = [int(v) for v in lines[ln].split()]
                    etype, ntags = parts[1], parts[2]
                    tags = parts[3 : 3 + ntags]
                    conn = parts[3 + ntags :]
                except (IndexError, ValueError):
                    fail(ln, f"malformed element record {lines[ln] if ln < len(lines) else ''!r}")
                if etype == 2:
                    if len(conn) != 3:
                        fail(ln, "triangle needs 3 nodes")
                    tris.append(tuple(conn))
                    tri_lines.append(ln)
                elif etype == 1:
                    if len(conn) != 2:
                        fail(ln, "line needs 2 nodes")
                    raw_edges.append((conn[0], conn[1], tags[0] if tags else OUTER_TAG))
            i += 2 + count
        else:
            i += 1
    if not seen_nodes:
        raise MeshParseError(f"{path}: missing $Nodes section")
    if not seen_elements:
        raise MeshParseError(f"{path}: missing $Elements section")

    def idx(nid, ln):
        if nid not in node_ids:
            raise MeshValidationError(f"{path}: element on line {ln + 1} references unknown node id {nid}")
        return node_ids[nid]

    tri_idx = [tuple(idx(n, ln) for n in t) for t, ln in zip(tris, tri_lines)]
    edge_tags = {}
    for a, b, tag in raw_edges:
        ia, ib = node_ids.get(a), node_ids.get(b)
        if ia is None or ib is None:
            raise MeshValidationError(f"{path}: boundary line references unknown node id {a if ia is None else b}")
        edge_tags[(min(ia, ib), max(ia, ib))] = tag
    used = np.unique(np.array(tri_idx, dtype=np.int64).ravel()) if tri_idx else np.array([], dtype=np.int64)
    coords_arr = np.array(coords, dtype=float)
    if len(used) != len(coords_arr):
        # drop nodes not referenced by any triangle (e.g. geometry points)
        remap = -np.ones(len(coords_arr), dtype=np.int64)
        remap[used] = np.arange(len(used))
        tri_idx = remap[np.array(tri_idx, dtype=np.int64)]
        edge_tags = {
            (min(remap[a], remap[b]), max(remap[a], remap[b])): t
            for (a, b), t in edge_tags.items()
            if remap[a] >= 0 and remap[b] >= 0
        }
        coords_arr = coords_arr[used]
    return build_mesh(coords_arr, tri_idx, edge_tags)


def write_mesh(mesh: TerrainMesh, path) -> None:
    """Write ``mesh`` as MSH 2.2 ASCII with tagged boundary line elements."""
    out = ["$MeshFormat", "2.2 0 8", "$EndMeshFormat", "$Nodes", str(mesh.n_nodes)]
    out += [f"{k + 1} {x!r} {y!r} {z!r}" for k, (x, y, z) in enumerate(mesh.nodes.tolist())]
    out += ["$EndNodes", "$Elements", str(len(mesh.boundary_edges) + mesh.n_elements)]
    eid = 1
    for (a, b), tag in zip(mesh.boundary_edges.tolist(), mesh.boundary_tags.tolist()):
        out.append(f"{eid} 1 2 {tag} {tag} {a + 1} {b + 1}")
        eid += 1
    for a, b, c in mesh.triangles.tolist():
        out.append(f"{eid} 2 2 0 0 {a + 1} {b + 1} {c + 1}")
        eid += 1
    out.append("$EndElements")
    Path(path).write_text("\n".join(out) + "\n")


@dataclass(eq=False)
class DemRaster:
    """Regular elevation grid read from an ESRI ASCII file (row 0 = north)."""

    values: np.ndarray  # (nrows, ncols), NaN for NODATA
    xll: float
    yll: float
    cellsize: float

    def __post_init__(self):
        nrows, ncols = self.values.shape
        xs = self.xll + (np.arange(ncols) + 0.5) * self.cellsize
        ys = self.yll + (np.arange(nrows) + 0.5) * self.cellsize
        # flip so y is ascending for the interpolator
        self._interp = RegularGridInterpolator(
            (ys, xs), self.values[::-1], method="linear", bounds_error=False, fill_value=None
        )

    def height(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        return self._interp(pts[:, ::-1])


def load_dem(path) -> DemRaster:
    lines = Path(path).read_text().splitlines()
    header: dict[str, float] = {}
    k = 0
    for k, line in enumerate(lines):
        parts = line.split()
        if not parts:
            continue
        key = parts[0].lower()
        if key in ("ncols", "nrows", "xllcorner", "yllcorner", "xllcenter", "yllcenter", "cellsize", "nodata_value"):
            if len(parts) != 2:
                raise MeshParseError(f"{path}: line {k + 1}: malformed header entry {line!r}")
            try:
                header[key] = float(parts[1])
            except ValueError:
                raise MeshParseError(f"{path}: line {k + 1}: non-numeric header value {parts[1]!r}") from None
        else:
            break
    for key in ("ncols", "nrows", "cellsize"):
        if key not in header:
            raise MeshParseError(f"{path}: missing header key {key}")
    ncols, nrows, cs = int(header["ncols"]), int(header["nrows"]), header["cellsize"]
    if "xllcorner" in header:
        xll, yll = header["xllcorner"], header.get("yllcorner", 0.0)
    elif "xllcenter" in header:
        xll, yll = header["xllcenter"] - cs / 2, header.get("yllcenter", 0.0) - cs / 2
    else:
        raise MeshParseError(f"{path}: missing xllcorner/xllcenter")
    vals = []
    for ln in range(k, len(lines)):
        try:
            vals.extend(float(v) for v in lines[ln].split())
        except ValueError:
            raise MeshParseError(f"{path}: line {ln + 1}: non-numeric raster value") from None
    if len(vals) != ncols * nrows:
        raise MeshParseError(f"{path}: expected {ncols * nrows} values, found {len(vals)}")
    grid = np.array(vals).reshape(nrows, ncols)
    if "nodata_value" in header:
        grid[grid == header["nodata_value"]] = np.nan
    return DemRaster(grid, xll, yll, cs)


def write_dem(dem: DemRaster, path, nodata: float = -9999.0) -> None:
    nrows, ncols = dem.values.shape
    out = [
        f"ncols {ncols}",
        f"nrows {nrows}",
        f"xllcorner {dem.xll!r}",
        f"yllcorner {dem.yll!r}",
        f"cellsize {dem.cellsize!r}",
        f"NODATA_value {nodata!r}",
    ]
    vals = np.where(np.isnan(dem.values), nodata, dem.values)
    out += [" ".join(f"{v:.6f}" for v in row) for row in vals]
    Path(path).write_text("\n".join(out) + "\n")


# ---------------------------------------------------------------- queries


class Terrain:
    """Elevation lookup used by sensing and control.

    Inside the mesh the linear interpolant is used (or the DEM when
    ``prefer_dem``).  Outside the mesh, i.e. inside no-fly holes or beyond
    the outer boundary, the DEM is used when present and the nearest node
    otherwise.
    """

    def __init__(self, mesh: TerrainMesh, dem: DemRaster | None = None, prefer_dem: bool = False):
        self.mesh = mesh
        self.dem = dem
        self.prefer_dem = prefer_dem and dem is not None
        self.probe_step = min(dem.cellsize, 10.0) if dem is not None else 10.0
        self.z_min = float(mesh.z.min())
        self.z_max = float(mesh.z.max())

    def height(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        if self.prefer_dem:
            return self.dem.height(pts)
        z = self.mesh.interpolate(self.mesh.z, pts)
        miss = np.isnan(z)
        if miss.any():
            if self.dem is not None:
                z[miss] = self.dem.height(pts[miss])
            else:
                _, nn = self.mesh.kdtree.query(pts[miss])
                z[miss] = self.mesh.z[nn]
        return z


def elevation_at(mesh: TerrainMesh, p) -> float:
    """Barycentric interpolation of nodal elevation at a 2D point."""
    z = mesh.interpolate(mesh.z, np.asarray(p, dtype=float).reshape(1, 2))[0]
    if np.isnan(z):
        raise DomainError(f"point {tuple(np.asarray(p).tolist())} lies outside the search domain")
    return float(z)


def max_terrain_incline(mesh: TerrainMesh) -> float:
    """Largest per-triangle slope angle of the linear elevation interpolant."""
    g = mesh.triangle_gradient(mesh.z)
    return float(np.arctan(np.hypot(g[:, 0], g[:, 1])).max())


def supported_incline(spec) -> float:
    """Steepest terrain a UAV can follow keeping clearance ``delta`` at ``h_min``."""
    if not spec.delta > 0:
        raise SpecError(f"minimum clearance delta must be positive, got {spec.delta}")
    return math.atan(spec.h_min / spec.delta)


@dataclass
class InclineReport:
    kappa: list[float]
    kappa_terrain_max: float
    compatible: list[bool]
    names: list[str] = field(default_factory=list)

    @property
    def all_compatible(self) -> bool:
        return all(self.compatible)

    def table(self) -> str:
        rows = ["UAV type        Maximum supported terrain incline kappa"]
        for name, k, ok in zip(self.names, self.kappa, self.compatible):
            rows.append(f"{name:<15} {math.degrees(k):6.1f} deg   {'compatible' if ok else 'INCOMPATIBLE'}")
        rows.append(f"Maximum terrain incline kappa_T,max: {math.degrees(self.kappa_terrain_max):.1f} deg")
        return "\n".join(rows)


def incline_audit(mesh: TerrainMesh, fleet, names=None) -> InclineReport:
    kt = max_terrain_incline(mesh)
    kappa = [supported_incline(s) for s in fleet]
    names = list(names) if names is not None else [getattr(s, "name", f"uav{i}") for i, s in enumerate(fleet)]
    return InclineReport(kappa, kt, [k > kt for k in kappa], names)
