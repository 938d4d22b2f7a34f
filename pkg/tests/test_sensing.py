import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from uavsearch.motion import UAVState
from uavsearch.sensing import (
    SENSOR_A, SENSOR_C, SensorSpec, detection_rate, in_fov, line_of_sight, local_coords, sense_footprint,
)
from uavsearch.synthetic import rectangle_mesh
from uavsearch.terrain import Terrain

FLAT = Terrain(rectangle_mesh(80, 80, 400.0, 400.0, lambda x, y: 0.0 * x + 10.0))


def test_local_coords_examples():
    assert np.allclose(local_coords((0, 0, 50), 0.0, (0, 0), 0.0), [[0, 0, 50]])
    r = local_coords((0, 0, 50), math.pi / 2, (10, 0), 0.0)[0]
    assert r[0] == pytest.approx(0.0, abs=1e-12) and abs(r[1]) == pytest.approx(10.0) and r[2] == 50
    assert np.allclose(local_coords((3, 4, 7), 1.1, (3, 4), 7.0), 0.0)


def test_in_fov_examples():
    wide = SensorSpec(math.radians(90.0), math.radians(30.0), 1.0, 0.0, 1.0, 1.0)
    assert in_fov([[0, 0, 50]], SENSOR_A)[0]
    assert in_fov([[0, 100, 100]], wide)[0]
    assert not in_fov([[0, 100.01, 100]], wide)[0]
    assert not in_fov([[0, 0, 0]], wide)[0]
    assert not in_fov([[0, 0, -5]], wide)[0]


def test_detection_rate_closed_form():
    # k * exp(q * (b - d) / s) with k=1.2, b=-50, s=25, q=0.55
    assert SENSOR_A.rate(0.0) == pytest.approx(0.39944530, abs=1e-8)
    assert SENSOR_A.rate(50.0) == pytest.approx(0.13296379, abs=1e-8)
    assert detection_rate([[0, 0, 50]], SENSOR_A)[0] == pytest.approx(SENSOR_A.rate(50.0))
    assert detection_rate([[0, 500, 50]], SENSOR_A)[0] == 0.0
    assert detection_rate([[0, 0, 50]], SENSOR_A, visible=False)[0] == 0.0


@given(st.floats(0, 500), st.floats(0, 500))
def test_rate_non_increasing(d1, d2):
    lo, hi = sorted((d1, d2))
    assert SENSOR_C.rate(hi) <= SENSOR_C.rate(lo)


def test_line_of_sight_ridge():
    ridge = Terrain(rectangle_mesh(100, 4, 200.0, 20.0, lambda x, y: 100.0 * np.exp(-((x - 100.0) / 5.0) ** 2)))
    X = np.array([20.0, 10.0, 50.0])
    target = np.array([[180.0, 10.0, 0.0]])
    assert not line_of_sight(X, target, ridge, step=1.0)[0]
    near = np.array([[60.0, 10.0, float(ridge.height([[60.0, 10.0]])[0])]])
    assert line_of_sight(X, near, ridge, step=1.0)[0]
    below = np.array([[20.0, 10.0, float(ridge.height([[20.0, 10.0]])[0])]])
    assert line_of_sight(X, below, ridge, step=1.0)[0]


def test_footprint_matches_projected_rectangle():
    h = 50.0
    s = UAVState(200.0, 200.0, 10.0 + h, 0.0)
    idx, rates = sense_footprint(s, SENSOR_A, FLAT)
    hl, hw = h * math.tan(SENSOR_A.gamma_lon / 2), h * math.tan(SENSOR_A.gamma_lat / 2)
    d = FLAT.mesh.xy - [200.0, 200.0]
    expect = np.flatnonzero((np.abs(d[:, 0]) <= hl + 1e-9) & (np.abs(d[:, 1]) <= hw + 1e-9))
    assert np.array_equal(np.sort(idx), expect)
    dist = np.sqrt(np.sum(d[idx] ** 2, axis=1) + h**2)
    assert np.allclose(rates, SENSOR_A.rate(dist))


def test_footprint_mirrors_under_half_turn():
    theta = 0.3
    a, _ = sense_footprint(UAVState(200.0, 200.0, 60.0, theta), SENSOR_A, FLAT)
    b, _ = sense_footprint(UAVState(200.0, 200.0, 60.0, theta + math.pi), SENSOR_A, FLAT)
    pa = {tuple(np.round(2 * np.array([200.0, 200.0]) - p, 6)) for p in FLAT.mesh.xy[a]}
    pb = {tuple(np.round(p, 6)) for p in FLAT.mesh.xy[b]}
    assert pa == pb and len(pa) > 10


def test_fully_occluded_uav_senses_nothing():
    idx, rates = sense_footprint(UAVState(200.0, 200.0, 5.0, 0.0), SENSOR_A, FLAT)
    assert idx.size == 0 and rates.size == 0
    # inside a narrow shaft the walls hide all ground outside it
    pit = Terrain(rectangle_mesh(80, 80, 400.0, 400.0,
                                 lambda x, y: np.where(np.hypot(x - 200, y - 200) < 8, 0.0, 200.0)))
    idx, _ = sense_footprint(UAVState(200.0, 200.0, 40.0, 0.0), SENSOR_A, pit)
    assert np.all(np.hypot(*(pit.mesh.xy[idx] - 200.0).T) < 10.0)
