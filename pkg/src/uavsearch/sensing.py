"""Pyramidal field-of-view sensing with line-of-sight occlusion over terrain."""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class SensorSpec:
    """Nadir camera with a heading-aligned rectangular pyramid FOV.

    ``gamma_lat`` is the full across-track angle, ``gamma_lon`` the full
    along-track angle.  Detection rate at distance ``d`` is
    ``gain * exp(power * (offset - d) / scale)``.
    """

    gamma_lat: float
    gamma_lon: float
    gain: float
    offset: float
    scale: float
    power: float

    def rate(self, d):
        return self.gain * np.exp(self.power * (self.offset - np.asarray(d, dtype=float)) / self.scale)

    def problems(self) -> list[str]:
        out = []
        if not (0 < self.gamma_lat < math.pi and 0 < self.gamma_lon < math.pi):
            out.append("FOV angles must lie in (0, pi)")
        if not (self.gain >= 0 and self.scale > 0 and self.power >= 0):
            out.append("sensing function must be nonnegative and non-increasing (gain >= 0, scale > 0, power >= 0)")
        return out

    def half_widths(self, height: float) -> tuple[float, float]:
        """Lateral and longitudinal half-extent of the footprint at ``height``."""
        return height * math.tan(self.gamma_lat / 2), height * math.tan(self.gamma_lon / 2)


SENSOR_A = SensorSpec(math.radians(62.8), math.radians(37.9), 1.2, -50.0, 25.0, 0.55)
SENSOR_B = SensorSpec(math.radians(44.2), math.radians(21.3), 1.4, -45.0, 35.0, 0.6)
SENSOR_C = SensorSpec(math.radians(90.0), math.radians(54.3), 1.6, -45.0, 35.0, 0.6)


def local_coords(X, theta: float, p, z_T) -> np.ndarray:
    """Offsets of terrain point(s) ``p`` in the UAV frame.

    Returns rows ``(longitudinal, lateral, vertical)``: the world offset
    ``X - [p, z_T(p)]`` rotated by ``-theta`` so that the first axis lies
    along the heading.
    """
    X = np.asarray(X, dtype=float)
    p = np.atleast_2d(np.asarray(p, dtype=float))
    d = np.column_stack([X[0] - p[:, 0], X[1] - p[:, 1], X[2] - np.broadcast_to(z_T, (len(p),))])
    c, s = math.cos(theta), math.sin(theta)
    out = np.column_stack([c * d[:, 0] + s * d[:, 1], -s * d[:, 0] + c * d[:, 1], d[:, 2]])
    return out


def in_fov(R, sensor: SensorSpec) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    h = R[:, 2]
    # relative slack keeps points exactly on a face inside the closed pyramid
    eps = 1e-12 * np.maximum(h, 1.0)
    return (
        (h > 0)
        & (np.abs(R[:, 1]) <= h * math.tan(sensor.gamma_lat / 2) + eps)
        & (np.abs(R[:, 0]) <= h * math.tan(sensor.gamma_lon / 2) + eps)
    )


def line_of_sight(X, p_surf, terrain, step: float | None = None) -> np.ndarray:
    """True where the open segment X -> p_surf stays strictly above terrain.

    Probes are spaced ``step`` apart along the horizontal projection,
    endpoints excluded.  ``terrain`` needs a vectorised ``height`` method.
    """
    X = np.asarray(X, dtype=float)
    P = np.atleast_2d(np.asarray(p_surf, dtype=float))
    step = terrain.probe_step if step is None else step
    horiz = np.hypot(P[:, 0] - X[0], P[:, 1] - X[1])
    nprobe = np.ceil(horiz / step).astype(int) - 1  # probes at k*step, k=1..nprobe
    nprobe = np.maximum(nprobe, 0)
    kmax = int(nprobe.max()) if len(nprobe) else 0
    visible = np.ones(len(P), dtype=bool)
    if kmax == 0:
        return visible
    k = np.arange(1, kmax + 1)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = k[None, :] * step / horiz[:, None]  # segment parameter from X
    mask = k[None, :] <= nprobe[:, None]
    rows, cols = np.nonzero(mask)
    t = s[rows, cols]
    pts = X[None, :2] + t[:, None] * (P[rows, :2] - X[None, :2])
    seg_z = X[2] + t * (P[rows, 2] - X[2])
    ground = terrain.height(pts)
    blocked = ~(seg_z > ground)
    np.logical_and.at(visible, rows, ~blocked)
    return visible


def detection_rate(R, sensor: SensorSpec, visible=True) -> np.ndarray:
    R = np.atleast_2d(np.asarray(R, dtype=float))
    inside = in_fov(R, sensor) & np.asarray(visible, dtype=bool)
    return np.where(inside, sensor.rate(np.linalg.norm(R, axis=1)), 0.0)


def footprint_radius(height: float, sensor: SensorSpec) -> float:
    a, b = sensor.half_widths(max(height, 0.0))
    return math.hypot(a, b)


def sense_footprint(state, sensor: SensorSpec, terrain) -> tuple[np.ndarray, np.ndarray]:
    """Detection rates on mesh nodes seen by a UAV in ``state``.

    Returns ``(node_indices, rates)`` for nodes with a nonzero rate.
    """
    mesh = terrain.mesh
    X = np.array([state.x, state.y, state.z])
    theta = state.theta
    depth = X[2] - terrain.z_min
    if depth <= 0:
        return np.empty(0, dtype=np.int64), np.empty(0)
    idx = np.asarray(mesh.kdtree.query_ball_point(X[:2], footprint_radius(depth, sensor) * (1 + 1e-9)), dtype=np.int64)
    if idx.size == 0:
        return idx, np.empty(0)
    idx.sort()
    R = local_coords(X, theta, mesh.xy[idx], mesh.z[idx])
    inside = in_fov(R, sensor)
    idx, R = idx[inside], R[inside]
    if idx.size == 0:
        return idx, np.empty(0)
    vis = line_of_sight(X, mesh.nodes[idx], terrain)
    idx, R = idx[vis], R[vis]
    return idx, sensor.rate(np.linalg.norm(R, axis=1))
