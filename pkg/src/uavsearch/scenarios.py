"""Scripted desk-scale scenarios written as mesh + TOML directories."""
from __future__ import annotations

import math
from pathlib import Path

from .synthetic import crater_terrain, dune_terrain, rectangle_mesh, rugged_terrain
from .terrain import write_mesh


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return '"' + v.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_fmt(x) for x in v) + "]"
    if isinstance(v, dict):
        return "{ " + ", ".join(f"{k} = {_fmt(x)}" for k, x in v.items()) + " }"
    raise TypeError(f"cannot write {type(v).__name__} as TOML")


def dump_toml(data: dict) -> str:
    """Serialise the small subset of TOML used by scenario files."""
    lines = []
    for key, val in data.items():
        if isinstance(val, list) and val and all(isinstance(x, dict) for x in val):
            for item in val:
                lines.append(f"[[{key}]]")
                lines += [f"{k} = {_fmt(x)}" for k, x in item.items()]
                lines.append("")
        elif isinstance(val, dict):
            lines.append(f"[{key}]")
            lines += [f"{k} = {_fmt(x)}" for k, x in val.items()]
            lines.append("")
        else:
            raise TypeError(f"top-level key {key!r} must be a table or array of tables")
    return "\n".join(lines)


def _uav(preset, x, y, heading, altitude, **extra):
    return {"preset": preset, "x": x, "y": y, "heading": heading, "altitude": altitude, "rho": 1.0, "phi": 0.0, **extra}


def rugged(duration=900.0):
    """Hilly 900 m x 800 m field (0.72 km^2, ~8.4k nodes) searched by three multi-rotors."""
    lx, ly = 900.0, 800.0
    mesh = rectangle_mesh(90, 91, lx, ly, rugged_terrain(lx, ly))
    cfg = {
        "scenario": {"mesh": "terrain.msh", "dt": 1.0, "duration": duration, "seed": 0},
        "hedac": {"alpha": 1000.0, "beta": 0.1},
        "initial_probability": {"kind": "uniform"},
        "output": {"snapshot_stride": 0},
        "uav": [_uav("A", 150.0, 150.0 + 150.0 * k, 0.0, 50.0) for k in range(3)],
    }
    return mesh, cfg


def dunes(duration=3600.0):
    """Smooth 3000 m x 2500 m dune field (7.5 km^2) searched by two fixed-wing UAVs."""
    lx, ly = 3000.0, 2500.0
    mesh = rectangle_mesh(60, 50, lx, ly, dune_terrain(lx, ly))
    cfg = {
        "scenario": {"mesh": "terrain.msh", "dt": 2.0, "duration": duration, "seed": 0},
        "hedac": {"alpha": 500.0, "beta": 0.1},
        "initial_probability": {"kind": "uniform"},
        "output": {"snapshot_stride": 0},
        "uav": [_uav("C", 500.0, 600.0 + 700.0 * k, 0.0, 150.0) for k in range(2)],
    }
    return mesh, cfg


def crater(duration=600.0, nx=150, ny=146):
    """Volcanic cone 2750 m x 2700 m with a rectangular no-fly zone; three A and two B.

    The default resolution gives about 22k nodes.
    """
    lx, ly = 2750.0, 2700.0
    hole = (1700.0, 500.0, 2100.0, 800.0)
    mesh = rectangle_mesh(nx, ny, lx, ly, crater_terrain(lx, ly, 450.0), holes=[hole])
    uavs = [_uav("A", 300.0, 400.0 + 200.0 * k, 0.0, 50.0) for k in range(3)]
    uavs += [_uav("B", 2400.0, 1600.0 + 250.0 * k, 180.0, 100.0) for k in range(2)]
    cfg = {
        "scenario": {"mesh": "terrain.msh", "dt": 1.0, "duration": duration, "seed": 0},
        "hedac": {"alpha": 500.0, "beta": 0.4},
        "initial_probability": {"kind": "uniform"},
        "output": {"snapshot_stride": 0},
        "uav": uavs,
    }
    return mesh, cfg


def _explicit_a(lateral_deg: float) -> dict:
    """UAV A parameters with a configurable lateral field of view."""
    return {
        "type": "multi-rotor", "R_min": 25.0, "delta": 7.0, "h_min": 30.0, "h_goal": 50.0,
        "v_s_max": 10.0, "v_s_min": 0.0, "v_z_max": 5.0, "v_z_min": -3.0,
        "a_s_max": 2.0, "a_s_min": -3.6, "a_z_max": 2.8, "a_z_min": -2.0,
        "phi_min_deg": -90.0, "phi_max_deg": 90.0,
        "fov_lateral_deg": lateral_deg, "fov_longitudinal_deg": 37.9,
        "sensing": {"k": 1.2, "b": -50.0, "s": 25.0, "q": 0.55}, "n_pts": 20,
    }


def fov_case(lateral_deg: float, duration=300.0, sigma=15.0, lx=600.0):
    """One multi-rotor over flat ground with a sharply concentrated target prior.

    The UAV starts tangent to a circle of radius ``R_min`` around the prior
    peak, which holds half the probability mass.  With a narrow lateral field of view the footprint never reaches
    the centre of its own turn circle, so it keeps orbiting the peak.
    """
    ly = lx
    n = int(lx // 20)
    mesh = rectangle_mesh(n, n, lx, ly, lambda x, y: 0.0 * x + 100.0)
    cx, cy = lx / 2, ly / 2
    uav = {**_explicit_a(lateral_deg), "x": cx, "y": cy - 25.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0}
    cfg = {
        "scenario": {"mesh": "terrain.msh", "dt": 1.0, "duration": duration, "seed": 0},
        "hedac": {"alpha": 1000.0, "beta": 0.1},
        "initial_probability": {"kind": "gaussian_mixture", "components": [
            {"center": [cx, cy], "sigma": sigma, "weight": 1.0},
            # broad background of equal mass, so a working sensor keeps finding targets
            {"center": [cx, cy], "sigma": lx / 2, "weight": (2 * sigma / lx) ** 2},
        ]},
        "output": {"snapshot_stride": 0},
        "uav": [uav],
    }
    return mesh, cfg


SCENARIOS = {"rugged": rugged, "dunes": dunes, "crater": crater}


def write_scenario(mesh, cfg: dict, out_dir) -> Path:
    """Write ``terrain.msh`` and ``scenario.toml``; returns the config path."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    write_mesh(mesh, out / cfg["scenario"]["mesh"])
    path = out / "scenario.toml"
    path.write_text(dump_toml(cfg))
    return path


def degenerate_lateral_fov(R_min: float = 25.0, h_goal: float = 50.0) -> float:
    """Largest lateral FOV (deg) whose footprint at ``h_goal`` is below ``2 R_min``, minus a margin."""
    return math.degrees(2 * math.atan(R_min / h_goal)) * 0.5
