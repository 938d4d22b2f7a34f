import csv
import math

import numpy as np
import pytest

from helpers import flat_mesh, scenario_dir, small_config
from uavsearch.fields import ConfigError
from uavsearch.motion import UAV_A, UAVState
from uavsearch.sim import StepRecord, check_invariants, load_config, parse_config, prepare, run
from uavsearch.synthetic import rectangle_mesh
from uavsearch.terrain import Terrain


def _run(tmp_path, cfg, mesh=None, out="out"):
    path = scenario_dir(tmp_path, mesh or flat_mesh(), cfg)
    return run(load_config(path), tmp_path / out)


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_zero_duration_run(tmp_path):
    res = _run(tmp_path, small_config(duration=0.0))
    assert len(res.records) == 1 and res.records[0].eta == 0.0
    out = tmp_path / "out"
    assert len(_rows(out / "trajectory.csv")) == 1
    metrics = _rows(out / "metrics.csv")
    assert len(metrics) == 1 and float(metrics[0]["eta"]) == 0.0
    assert (out / "fields" / "undetected_000000.csv").exists()
    assert res.summary["final_eta"] == 0.0


def _static_eta(mesh, x, y, h, sensor, exposure):
    """1 - integral of m0 exp(-c) for a still footprint, evaluated from scratch."""
    xy, tri = mesh.xy, mesh.triangles
    dx, dy = xy[:, 0] - x, xy[:, 1] - y  # heading +x: longitudinal is x
    inside = (np.abs(dy) <= h * math.tan(sensor.gamma_lat / 2) + 1e-9) & (np.abs(dx) <= h * math.tan(sensor.gamma_lon / 2) + 1e-9)
    d = np.sqrt(dx ** 2 + dy ** 2 + h ** 2)
    rate = np.where(inside, sensor.gain * np.exp(sensor.power * (sensor.offset - d) / sensor.scale), 0.0)
    p = xy[tri]
    area = 0.5 * np.abs((p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1]) - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1]))
    m0 = 1.0 / area.sum()
    remaining = np.sum(area / 3 * np.sum(m0 * np.exp(-exposure * rate)[tri], axis=1))
    return 1.0 - remaining


def test_hovering_uav_matches_static_footprint(tmp_path):
    mesh = rectangle_mesh(40, 40, 400.0, 400.0, lambda x, y: 0.0 * x)
    uav = {"preset": "A", "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 0.0, "phi": 0.0, "hover": True}
    res = _run(tmp_path, small_config(duration=100.0, uavs=[uav]), mesh)
    expected = _static_eta(mesh, 200.0, 200.0, 50.0, UAV_A.sensor, 100.0)
    assert expected > 0.01
    assert res.summary["final_eta"] == pytest.approx(expected, rel=1e-9)
    assert res.records[-1].states[0].xy == (200.0, 200.0)


def test_run_is_deterministic(tmp_path):
    cfg = small_config(duration=8.0)
    _run(tmp_path, cfg, out="a")
    _run(tmp_path, cfg, out="b")
    assert (tmp_path / "a" / "trajectory.csv").read_bytes() == (tmp_path / "b" / "trajectory.csv").read_bytes()


def test_eta_monotone_and_constraints_hold(tmp_path):
    uavs = [
        {"preset": "A", "x": 100.0, "y": 120.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0},
        {"preset": "A", "x": 300.0, "y": 280.0, "heading": 180.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0},
    ]
    res = _run(tmp_path, small_config(duration=30.0, uavs=uavs))
    eta = [r.eta for r in res.records]
    assert all(b >= a for a, b in zip(eta, eta[1:])) and eta[-1] > 0
    assert res.violations == []
    assert res.summary["min_altitude_above_terrain"] >= UAV_A.h_min - 1e-6
    assert len(_rows(tmp_path / "out" / "trajectory.csv")) == 2 * 31


def test_all_hover_min_clearance_is_initial_spacing(tmp_path):
    uavs = [
        {"preset": "A", "x": 150.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 0.0, "phi": 0.0, "hover": True},
        {"preset": "A", "x": 250.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 0.0, "phi": 0.0, "hover": True},
    ]
    res = _run(tmp_path, small_config(duration=5.0, uavs=uavs))
    assert res.summary["min_pairwise_distance"] == pytest.approx(100.0)


def _state(z):
    return UAVState(200.0, 200.0, z, 0.0, 0.0, 0.0)


def test_invariant_checker_flags_low_altitude():
    terrain = Terrain(flat_mesh())
    ok = StepRecord(0.0, [_state(50.0)], 0.0, 0.0)
    low = StepRecord(1.0, [_state(10.0)], 0.0, 0.0)
    assert check_invariants([ok], [UAV_A], terrain, None, 1.0) == []
    found = check_invariants([ok, low], [UAV_A], terrain, None, 1.0)
    assert any("below h_min" in v for v in found)


@pytest.mark.parametrize("change, needle", [
    ({"dt": 0.0}, "dt"),
    ({"duration": 2.5}, "duration"),
])
def test_scenario_table_errors(change, needle):
    cfg = small_config()
    cfg["scenario"].update(change)
    with pytest.raises(ConfigError, match=needle):
        parse_config(cfg)


def test_structural_errors():
    cfg = small_config()
    cfg["uav"] = []
    with pytest.raises(ConfigError, match="fleet"):
        parse_config(cfg)
    cfg = small_config(uavs=[{"preset": "Z", "x": 1.0}])
    with pytest.raises(ConfigError, match="preset"):
        parse_config(cfg)
    cfg = small_config()
    del cfg["hedac"]
    with pytest.raises(ConfigError, match="hedac"):
        parse_config(cfg)


def _explicit(**over):
    from uavsearch.scenarios import _explicit_a
    return {**_explicit_a(62.8), "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0, **over}


@pytest.mark.parametrize("uav, needle", [
    (_explicit(h_min=60.0), "h_min"),
    ({"preset": "A", "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 10.0, "rho": 1.0, "phi": 0.0}, "below h_min"),
    ({"preset": "A", "x": 2.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0}, "boundary"),
    ({"preset": "A", "x": 900.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0}, "outside"),
])
def test_prepare_rejects_bad_fleet(tmp_path, uav, needle):
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=[uav]))
    with pytest.raises(ConfigError, match=needle):
        prepare(load_config(path))


def test_prepare_rejects_close_start_and_missing_mesh(tmp_path):
    uavs = [
        {"preset": "A", "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0},
        {"preset": "A", "x": 203.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0},
    ]
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=uavs))
    with pytest.raises(ConfigError, match="apart"):
        prepare(load_config(path))
    (tmp_path / "terrain.msh").unlink()
    with pytest.raises(ConfigError):
        prepare(load_config(path))


def test_steep_terrain_needs_override(tmp_path):
    mesh = rectangle_mesh(20, 20, 400.0, 400.0, lambda x, y: 5.0 * x)
    cfg = small_config()
    path = scenario_dir(tmp_path, mesh, cfg)
    with pytest.raises(ConfigError, match="incline"):
        prepare(load_config(path))
    cfg["scenario"]["override_incline"] = True
    path = scenario_dir(tmp_path, mesh, cfg)
    sc = prepare(load_config(path))
    assert any("overridden" in w for w in sc.warnings)


def test_narrow_fov_warns(tmp_path):
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=[_explicit(fov_lateral_deg=20.0)]))
    sc = prepare(load_config(path))
    assert any("narrower than the minimum turn diameter" in w for w in sc.warnings)
