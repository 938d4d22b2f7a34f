import csv
import math
import re
import subprocess
import sys

import pytest

from helpers import flat_mesh, scenario_dir, small_config
from uavsearch.cli import EXIT_INVALID, EXIT_OK, main
from uavsearch.synthetic import rectangle_mesh


def _uav(preset, x, y, altitude):
    return {"preset": preset, "x": x, "y": y, "heading": 0.0, "altitude": altitude, "rho": 1.0, "phi": 0.0}


def _rows(path):
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def test_validate_ok(tmp_path, capsys):
    path = scenario_dir(tmp_path, flat_mesh(), small_config())
    assert main(["validate", "--config", str(path)]) == EXIT_OK
    out = capsys.readouterr().out
    assert "configuration valid" in out and "441 nodes" in out


def test_validate_zero_dt(tmp_path, capsys):
    path = scenario_dir(tmp_path, flat_mesh(), small_config(dt=0.0))
    assert main(["validate", "--config", str(path)]) == EXIT_INVALID
    assert "dt must be positive" in capsys.readouterr().err


def test_validate_h_min_above_goal(tmp_path, capsys):
    from uavsearch.scenarios import _explicit_a
    uav = {**_explicit_a(62.8), "h_min": 60.0, "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 70.0, "rho": 1.0, "phi": 0.0}
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=[uav]))
    assert main(["validate", "--config", str(path)]) == EXIT_INVALID
    assert "h_min" in capsys.readouterr().err


def test_validate_warns_on_narrow_fov(tmp_path, capsys):
    from uavsearch.scenarios import _explicit_a
    uav = {**_explicit_a(20.0), "x": 200.0, "y": 200.0, "heading": 0.0, "altitude": 50.0, "rho": 1.0, "phi": 0.0}
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=[uav]))
    assert main(["validate", "--config", str(path)]) == EXIT_OK
    assert "warning:" in capsys.readouterr().out


def test_missing_config_is_invalid(tmp_path):
    assert main(["validate", "--config", str(tmp_path / "nope.toml")]) == EXIT_INVALID


def _incline_rows(text):
    return {m.group(1): (float(m.group(2)), m.group(3)) for m in re.finditer(r"^(UAV \w)\s+([\d.]+) deg\s+(\w+)", text, re.M)}


def test_incline_mixed_fleet(tmp_path, capsys):
    uavs = [_uav("A", 100.0, 200.0, 50.0), _uav("B", 300.0, 200.0, 100.0), _uav("A", 200.0, 100.0, 50.0)]
    path = scenario_dir(tmp_path, flat_mesh(), small_config(uavs=uavs))
    assert main(["incline", "--config", str(path)]) == EXIT_OK
    rows = _incline_rows(capsys.readouterr().out)
    assert set(rows) == {"UAV A", "UAV B"}
    assert rows["UAV A"][0] == pytest.approx(math.degrees(math.atan(30 / 7)), abs=0.05)


def test_incline_incompatible_exit(tmp_path, capsys):
    # 65 deg slopes: fine for the multi-rotors, too steep for the fixed-wing
    mesh = rectangle_mesh(20, 20, 2000.0, 2000.0, lambda x, y: math.tan(math.radians(65.0)) * x)
    uavs = [_uav("A", 500.0, 1000.0, 50.0), _uav("C", 1000.0, 1000.0, 150.0)]
    path = scenario_dir(tmp_path, mesh, small_config(uavs=uavs))
    assert main(["incline", "--config", str(path)]) == EXIT_INVALID
    rows = _incline_rows(capsys.readouterr().out)
    assert rows["UAV A"][1] == "compatible" and rows["UAV C"][1] != "compatible"
    assert rows["UAV C"][0] == pytest.approx(59.0, abs=0.05)
    assert main(["incline", "--config", str(path), "--override-incline"]) == EXIT_OK


def test_run_then_export_plots(tmp_path, capsys):
    path = scenario_dir(tmp_path, flat_mesh(), small_config(duration=6.0))
    out = tmp_path / "run"
    assert main(["run", "--config", str(path), "--out", str(out)]) == EXIT_OK
    assert "invariant violations: 0" in capsys.readouterr().out
    assert len(_rows(out / "trajectory.csv")) == 7
    assert main(["export-plots", "--config", str(path), "--out", str(out)]) == EXIT_OK
    plots = out / "plots"
    for name in ("controls", "velocity", "acceleration", "altitude"):
        assert len(_rows(plots / f"uav0_{name}.csv")) == 6
    alt = _rows(plots / "uav0_altitude.csv")
    assert list(alt[0]) == ["t", "z", "z_T", "h_min_band", "h_goal_band"]
    for r in alt:
        assert float(r["h_min_band"]) == pytest.approx(float(r["z_T"]) + 30.0)
        assert float(r["z"]) >= float(r["h_min_band"]) - 1e-6
    assert len(_rows(plots / "eta.csv")) == 6


def test_export_plots_without_run_fails(tmp_path):
    path = scenario_dir(tmp_path, flat_mesh(), small_config())
    (tmp_path / "empty").mkdir()
    assert main(["export-plots", "--config", str(path), "--out", str(tmp_path / "empty")]) != EXIT_OK


def test_run_needs_output_dir(tmp_path):
    path = scenario_dir(tmp_path, flat_mesh(), small_config())
    assert main(["run", "--config", str(path)]) == EXIT_INVALID


def test_module_entry_point(tmp_path):
    path = scenario_dir(tmp_path, flat_mesh(), small_config())
    proc = subprocess.run([sys.executable, "-m", "uavsearch", "validate", "--config", str(path)],
                          capture_output=True, text=True)
    assert proc.returncode == 0 and "configuration valid" in proc.stdout
