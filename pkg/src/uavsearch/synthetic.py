"""Structured synthetic terrains for tests and desk-scale scenarios.

These are not a mesh generator: they tile a rectangle with right triangles,
optionally cut rectangular holes, and sample an analytic elevation function.
"""
from __future__ import annotations

import numpy as np

from .terrain import DemRaster, TerrainMesh, build_mesh


def rectangle_mesh(nx: int, ny: int, lx: float, ly: float, elevation=None, holes=(), origin=(0.0, 0.0), diagonal="alternate") -> TerrainMesh:
    """Triangulate ``[0, lx] x [0, ly]`` with an ``nx`` by ``ny`` cell grid.

    ``holes`` are axis-aligned rectangles ``(x0, y0, x1, y1)``; cells whose
    centre falls inside a hole are removed.  ``elevation(x, y)`` gives z_T.
    """
    x = origin[0] + np.linspace(0.0, lx, nx + 1)
    y = origin[1] + np.linspace(0.0, ly, ny + 1)
    X, Y = np.meshgrid(x, y, indexing="ij")
    xy = np.column_stack([X.ravel(), Y.ravel()])
    z = np.zeros(len(xy)) if elevation is None else np.asarray(elevation(xy[:, 0], xy[:, 1]), dtype=float) * np.ones(len(xy))

    def nid(i, j):
        return i * (ny + 1) + j

    tris = []
    for i in range(nx):
        xc = 0.5 * (x[i] + x[i + 1])
        for j in range(ny):
            yc = 0.5 * (y[j] + y[j + 1])
            if any(h[0] < xc < h[2] and h[1] < yc < h[3] for h in holes):
                continue
            a, b, c, d = nid(i, j), nid(i + 1, j), nid(i + 1, j + 1), nid(i, j + 1)
            flip = diagonal == "alternate" and (i + j) % 2 == 1
            if flip:
                tris += [(a, b, d), (b, c, d)]
            else:
                tris += [(a, b, c), (a, c, d)]
    tris = np.array(tris, dtype=np.int64)
    used = np.unique(tris)
    remap = -np.ones(len(xy), dtype=np.int64)
    remap[used] = np.arange(len(used))
    nodes = np.column_stack([xy[used], z[used]])
    # untagged: build_mesh tags the outer loop OUTER_TAG and holes 2, 3, ...
    return build_mesh(nodes, remap[tris])


def raster_from_function(elevation, x0, y0, lx, ly, cellsize) -> DemRaster:
    ncols = int(np.ceil(lx / cellsize))
    nrows = int(np.ceil(ly / cellsize))
    xs = x0 + (np.arange(ncols) + 0.5) * cellsize
    ys = y0 + (np.arange(nrows) + 0.5) * cellsize
    X, Y = np.meshgrid(xs, ys[::-1])
    return DemRaster(np.asarray(elevation(X, Y), dtype=float) * np.ones_like(X), x0, y0, cellsize)


# analytic terrains ----------------------------------------------------------


def rugged_terrain(lx: float, ly: float):
    """Exaggerated hills, a ridge and a valley (incline well below 76.9 deg)."""

    def f(x, y):
        u, v = np.asarray(x) / lx, np.asarray(y) / ly
        z = 120.0 * np.exp(-((u - 0.3) ** 2 + (v - 0.7) ** 2) / 0.02)
        z += 90.0 * np.exp(-((u - 0.75) ** 2 + (v - 0.3) ** 2) / 0.015)
        z += 40.0 * np.sin(4 * np.pi * u) * np.cos(3 * np.pi * v)
        z -= 60.0 * np.exp(-((u - 0.55) ** 2) / 0.004 - ((v - 0.6) ** 2) / 0.05)
        return z + 100.0

    return f


def dune_terrain(lx: float, ly: float):
    """Smooth star-dune-like field of broad mounds."""

    def f(x, y):
        u, v = np.asarray(x) / lx, np.asarray(y) / ly
        z = 60.0 * np.exp(-((u - 0.3) ** 2 + (v - 0.35) ** 2) / 0.03)
        z += 45.0 * np.exp(-((u - 0.7) ** 2 + (v - 0.65) ** 2) / 0.02)
        z += 15.0 * np.sin(2 * np.pi * u) * np.sin(2 * np.pi * v)
        return z + 300.0

    return f


def crater_terrain(lx: float, ly: float, rim_radius: float):
    """Volcanic cone with a crater at the domain centre."""

    def f(x, y):
        r = np.hypot(np.asarray(x) - lx / 2, np.asarray(y) - ly / 2)
        cone = 250.0 * np.exp(-((r / (2.2 * rim_radius)) ** 2))
        crater = -120.0 * np.exp(-((r / (0.7 * rim_radius)) ** 2))
        return 200.0 + cone + crater

    return f
