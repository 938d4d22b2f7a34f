"""Shared builders for the test suite."""
from uavsearch.scenarios import write_scenario
from uavsearch.synthetic import rectangle_mesh
from uavsearch.terrain import Terrain


def flat_mesh():
    return rectangle_mesh(20, 20, 400.0, 400.0, lambda x, y: 0.0 * x)


def flat_terrain():
    return Terrain(flat_mesh())


def scenario_dir(tmp_path, mesh, cfg: dict):
    return write_scenario(mesh, cfg, tmp_path)


def small_config(duration=10.0, uavs=None, mesh_name="terrain.msh", **scenario):
    cfg = {
        "scenario": {"mesh": mesh_name, "dt": 1.0, "duration": duration, "seed": 0, **scenario},
        "hedac": {"alpha": 1000.0, "beta": 0.1},
        "initial_probability": {"kind": "uniform"},
        "output": {"snapshot_stride": 0},
        "uav": uavs or [{"preset": "A", "x": 100.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0}],
    }
    return cfg

