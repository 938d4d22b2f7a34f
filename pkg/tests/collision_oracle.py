"""Brute-force checks for collision-resolution output, written without the guidance helpers."""
import math

import numpy as np


def clearing_centres(x, y, theta, omega, v_s_max, R, dt, speeds, substeps=200):
    """Clearing-circle centres (left, right) after ``dt`` at each speed, by fine Euler integration.

    The path over a step is the arc of curvature ``omega / v_s_max``.
    """
    out = []
    k = omega / v_s_max
    for v in speeds:
        px, py, th = x, y, theta
        ds = v * dt / substeps
        for _ in range(substeps):
            px += ds * math.cos(th + k * ds / 2)
            py += ds * math.sin(th + k * ds / 2)
            th += k * ds
        nx, ny = -math.sin(th), math.cos(th)
        out.append(((px + R * nx, py + R * ny), (px - R * nx, py - R * ny)))
    return out


def min_circle_clearance(g1, g2):
    """Smallest edge-to-edge distance between any circle of ``g1`` and any of ``g2``."""
    best = math.inf
    for c1, r1 in zip(g1.centers.tolist(), g1.radii.tolist()):
        for c2, r2 in zip(g2.centers.tolist(), g2.radii.tolist()):
            best = min(best, math.hypot(c1[0] - c2[0], c1[1] - c2[1]) - r1 - r2)
    return best


def random_encounter(rng, specs):
    """Two UAVs within a few turn radii of each other with arbitrary headings and candidates."""
    from uavsearch.motion import UAVState

    a, b = specs
    d = rng.uniform(max(a.delta, b.delta) + 1.0, 6 * (a.R_min + b.R_min))
    bearing = rng.uniform(-math.pi, math.pi)
    s0 = UAVState(0.0, 0.0, 100.0, rng.uniform(-math.pi, math.pi), 1.0, 0.0)
    s1 = UAVState(d * math.cos(bearing), d * math.sin(bearing), 100.0, rng.uniform(-math.pi, math.pi), 1.0, 0.0)
    cand = [rng.uniform(-a.omega_max, a.omega_max), rng.uniform(-b.omega_max, b.omega_max)]
    return [s0, s1], cand
