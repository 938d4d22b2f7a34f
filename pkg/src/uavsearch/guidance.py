"""Horizontal search control: gradient-following yaw and collision avoidance.

Each UAV is surrounded by two *bounding circles* (left ``+`` and right ``-``)
that contain every clearing circle of radius ``R_min`` tangent to the path it
may fly during the next control step, whatever its horizontal speed.  The
path over one step is the arc of constant curvature ``omega / v_s_max``; a
slower UAV covers a shorter piece of the same arc.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField, gradient_direction
from .terrain import TerrainMesh

N_SWEEP = 41


def clamp_omega(omega: float, spec) -> float:
    w = spec.omega_max
    return min(max(omega, -w), w)


def yaw_rate_toward(theta: float, direction, dt: float) -> float:
    """Signed unclamped yaw rate turning heading ``theta`` onto ``direction`` in ``dt``.

    The sign follows the 2D cross product heading x direction (positive is
    counter-clockwise); an exactly antiparallel direction turns left.
    """
    h = (math.cos(theta), math.sin(theta))
    d = direction
    dot = min(1.0, max(-1.0, h[0] * d[0] + h[1] * d[1]))
    cross = h[0] * d[1] - h[1] * d[0]
    mag = math.acos(dot) / dt
    return mag if cross >= 0 else -mag


def desired_yaw_rate(state, u: ScalarField, dt: float, spec) -> float:
    heading = (math.cos(state.theta), math.sin(state.theta))
    g = gradient_direction(u, (state.x, state.y), fallback=heading)
    return clamp_omega(yaw_rate_toward(state.theta, g, dt), spec)


# ------------------------------------------------------------------ geometry


def arc_point(x: float, y: float, theta: float, curvature: float, s: float) -> tuple[float, float, float]:
    """Position and heading after arc length ``s`` along constant curvature."""
    th = theta + curvature * s
    if abs(curvature) * max(s, 1.0) < 1e-12:
        return x + s * math.cos(theta), y + s * math.sin(theta), th
    r = 1.0 / curvature
    return x + r * (math.sin(th) - math.sin(theta)), y + r * (math.cos(theta) - math.cos(th)), th


def clearing_circles(state, omega: float, v_s: float, spec, dt: float) -> np.ndarray:
    """Centres of the left and right clearing circles after ``dt`` at speed ``v_s``.

    Rows are ``(+, -)``; radius is ``spec.R_min``.
    """
    k = omega / spec.v_s_max
    px, py, th = arc_point(state.x, state.y, state.theta, k, v_s * dt)
    n = np.array([-math.sin(th), math.cos(th)])
    p = np.array([px, py])
    return np.array([p + spec.R_min * n, p - spec.R_min * n])


@dataclass
class AvoidanceGeometry:
    """Bounding circles ``B+`` / ``B-`` (rows of ``centers``) for one UAV.

    An *escape-only* geometry carries a single circle: the UAV is committed
    to circling it.
    """

    centers: np.ndarray
    radii: np.ndarray
    omega: float
    delta: float
    sides: tuple[int, ...] = (1, -1)
    omega_esc: float = 0.0
    side: int = 1

    def circle(self, side: int) -> tuple[np.ndarray, float]:
        k = self.sides.index(side)
        return self.centers[k], float(self.radii[k])


def build_avoidance_geometry(state, omega: float, spec, dt: float) -> AvoidanceGeometry:
    c0 = clearing_circles(state, omega, 0.0, spec, dt)
    c1 = clearing_circles(state, omega, spec.v_s_max, spec, dt)
    cm = clearing_circles(state, omega, 0.5 * spec.v_s_max, spec, dt)
    # centres trace an arc, so the extremes are the farthest from cm
    spread = np.maximum(np.linalg.norm(c0 - cm, axis=1), np.linalg.norm(c1 - cm, axis=1))
    return AvoidanceGeometry(cm, spec.R_min + spread, omega, spec.delta)


def bounding_circles(state, omegas, spec, dt: float) -> tuple[np.ndarray, np.ndarray]:
    """Vectorised bounding circles for many candidate yaw rates.

    Returns centres ``(K, 2, 2)`` (rows ``+``, ``-``) and radii ``(K, 2)``.
    """
    w = np.asarray(omegas, dtype=float)
    k = w / spec.v_s_max
    straight = np.abs(k) * spec.v_s_max * dt < 1e-12
    ksafe = np.where(straight, 1.0, k)

    def centres(s):
        th = state.theta + k * s
        px = np.where(straight, state.x + s * math.cos(state.theta), state.x + (np.sin(th) - math.sin(state.theta)) / ksafe)
        py = np.where(straight, state.y + s * math.sin(state.theta), state.y + (math.cos(state.theta) - np.cos(th)) / ksafe)
        n = np.stack([-np.sin(th), np.cos(th)], axis=-1)
        p = np.stack([px, py], axis=-1)
        return np.stack([p + spec.R_min * n, p - spec.R_min * n], axis=1)

    c0, cm, c1 = centres(0.0), centres(0.5 * spec.v_s_max * dt), centres(spec.v_s_max * dt)
    spread = np.maximum(np.linalg.norm(c0 - cm, axis=2), np.linalg.norm(c1 - cm, axis=2))
    return cm, spec.R_min + spread


def escape_geometry(state, spec, side: int) -> AvoidanceGeometry:
    """Circle of radius ``R_min`` tangent at the current position on ``side``."""
    c = clearing_circles(state, 0.0, 0.0, spec, 1.0)[0 if side > 0 else 1]
    return AvoidanceGeometry(c[None, :], np.array([spec.R_min]), side * spec.omega_max, spec.delta, (side,), side * spec.omega_max, side)


class Boundary:
    """Clearance queries against the outer boundary and no-fly hole edges."""

    def __init__(self, mesh: TerrainMesh):
        self.mesh = mesh
        seg = mesh.boundary_segments
        self.a = seg[:, 0]
        self.d = seg[:, 1] - seg[:, 0]
        self.len2 = np.maximum(np.einsum("ij,ij->i", self.d, self.d), 1e-300)

    def distance(self, points) -> np.ndarray:
        """Distance from each point to the nearest boundary segment."""
        p = np.atleast_2d(np.asarray(points, dtype=float))
        rel = p[:, None, :] - self.a[None]
        t = np.clip(np.einsum("pkj,kj->pk", rel, self.d) / self.len2, 0.0, 1.0)
        diff = rel - t[..., None] * self.d[None]
        return np.sqrt(np.min(np.einsum("pkj,pkj->pk", diff, diff), axis=1))

    def circles_clear(self, centers, radii, delta: float) -> np.ndarray:
        """True where a circle lies inside the domain with edge clearance >= delta."""
        centers = np.atleast_2d(centers)
        inside = self.mesh.contains(centers)
        return inside & (self.distance(centers) - np.asarray(radii) >= delta)


def circle_clearance(c1, r1, c2, r2) -> float:
    return math.hypot(c1[0] - c2[0], c1[1] - c2[1]) - r1 - r2


def geometries_clear(g1: AvoidanceGeometry, g2: AvoidanceGeometry) -> bool:
    delta = max(g1.delta, g2.delta)
    d = np.linalg.norm(g1.centers[:, None, :] - g2.centers[None, :, :], axis=2)
    return bool(np.all(d - g1.radii[:, None] - g2.radii[None, :] >= delta))


@dataclass
class Resolution:
    omegas: list[float]
    sides: list[int]
    omega_esc: list[float]
    failed: list[bool]
    geometries: list[AvoidanceGeometry] = field(default_factory=list)
    adjusted: bool = False


def boundary_sides(g: AvoidanceGeometry, boundary: Boundary | None) -> list[int]:
    """Sides whose bounding circle keeps ``delta`` from the domain edges."""
    if boundary is None:
        return list(g.sides)
    ok = boundary.circles_clear(g.centers, g.radii, g.delta)
    return [side for side, flag in zip(g.sides, ok) if flag]


def _boundary_ok(g: AvoidanceGeometry, boundary: Boundary | None) -> bool:
    # the UAV ends the step on a clearing circle of either side, and one
    # clear side is enough to keep an escape circle available afterwards
    return bool(boundary_sides(g, boundary))


def resolve_collisions(states, specs, candidates, dt: float, boundary: Boundary | None = None, prev_sides=None) -> Resolution:
    """Centralised yaw-rate correction keeping all bounding circles apart.

    Candidates are kept when every bounding circle clears every other UAV's
    circles by the larger ``delta`` of the pair and at least one side's
    circle clears the boundary by ``delta``.  Otherwise each UAV in index order
    that is still in conflict sweeps a uniform grid of ``N_SWEEP`` yaw rates
    in ``[-omega_max, omega_max]`` and takes the clear value closest to its
    candidate.  A UAV with no clear value is revisited once after the
    others have moved out of its way.  If it is still blocked it may keep
    flying committed to a single bounding circle (the side it turns to) that
    clears everything else; otherwise it is marked failed and committed to
    its escape circle on its previously recorded side.
    """
    n = len(states)
    prev_sides = list(prev_sides) if prev_sides is not None else [1] * n
    omegas = [float(c) for c in candidates]
    geoms = [build_avoidance_geometry(s, w, sp, dt) for s, sp, w in zip(states, specs, omegas)]
    failed = [False] * n

    def ok(i, g):
        if not _boundary_ok(g, boundary):
            return False
        return all(geometries_clear(g, geoms[j]) for j in range(n) if j != i)

    def sweep(i) -> bool:
        wmax = specs[i].omega_max
        grid = np.linspace(-wmax, wmax, N_SWEEP)
        for w in grid[np.argsort(np.abs(grid - candidates[i]), kind="stable")]:
            g = build_avoidance_geometry(states[i], float(w), specs[i], dt)
            if ok(i, g):
                omegas[i], geoms[i] = float(w), g
                return True
        return False

    def commit_one_side(i) -> bool:
        # the UAV ends the step inside the bounding circle of the side it
        # turns towards, so that circle alone can carry the clearance
        wmax = specs[i].omega_max
        grid = np.linspace(-wmax, wmax, N_SWEEP)
        for w in grid[np.argsort(np.abs(grid - candidates[i]), kind="stable")]:
            g = build_avoidance_geometry(states[i], float(w), specs[i], dt)
            for side in ((1, -1) if w >= 0 else (-1, 1)):
                c, r = g.circle(side)
                single = AvoidanceGeometry(c[None, :], np.array([r]), float(w), g.delta, (side,), side=side)
                if ok(i, single):
                    omegas[i], geoms[i] = float(w), single
                    return True
        return False

    adjusted = False
    if not all(ok(i, geoms[i]) for i in range(n)):
        adjusted = True
        # a UAV with no clear value keeps its candidate geometry (which holds
        # its escape circle) so later UAVs steer around it, then retries
        deferred = [i for i in range(n) if not ok(i, geoms[i]) and not sweep(i)]
        for i in deferred:
            if not ok(i, geoms[i]) and not sweep(i) and not commit_one_side(i):
                failed[i] = True
                geoms[i] = escape_geometry(states[i], specs[i], prev_sides[i])
        # blocked UAVs were tested against geometries that may have moved
        # since; retry them against the committed set until nothing changes
        for _ in range(n):
            freed = [i for i in range(n) if failed[i] and (sweep(i) or commit_one_side(i))]
            for i in freed:
                failed[i] = False
            if not freed:
                break

    sides, escs = [], []
    for i in range(n):
        g = geoms[i]
        if failed[i]:
            sides.append(prev_sides[i])
            escs.append(prev_sides[i] * specs[i].omega_max)
            continue
        pref = (1, -1) if omegas[i] >= 0 else (-1, 1)
        clear = boundary_sides(g, boundary)
        chosen = next((side for side in pref if side in clear), pref[0])
        g.side = chosen
        g.omega_esc = chosen * specs[i].omega_max
        sides.append(chosen)
        escs.append(g.omega_esc)
    return Resolution(omegas, sides, escs, failed, geoms, adjusted)
