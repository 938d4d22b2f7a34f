"""Command-line front end: ``uavsearch {run,validate,incline,export-plots} --config FILE``."""
from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

import numpy as np

from .fields import ConfigError
from .sim import load_config, prepare, run
from .terrain import MeshParseError, MeshValidationError, SpecError, Terrain, incline_audit, load_dem, load_mesh

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_RUNTIME = 3

log = logging.getLogger("uavsearch")


def _load(args):
    cfg = load_config(args.config)
    if args.override_incline:
        cfg.override_incline = True
    if args.snapshot_stride is not None:
        if args.snapshot_stride < 0:
            raise ConfigError("--snapshot-stride must be nonnegative")
        cfg.snapshot_stride = args.snapshot_stride
    if args.seed is not None:
        cfg.seed = args.seed
    return cfg


def cmd_validate(args) -> int:
    sc = prepare(_load(args))
    cfg = sc.config
    print(f"mesh: {cfg.mesh_path} ({sc.mesh.n_nodes} nodes, {sc.mesh.n_elements} elements, "
          f"{sc.mesh.area / 1e6:.3f} km^2, {len(sc.mesh.loops) - 1} no-fly zones)")
    print(f"time: dt = {cfg.dt:g} s, duration = {cfg.duration:g} s ({cfg.n_steps} steps)")
    print(f"hedac: alpha = {cfg.hedac.alpha:g}, beta = {cfg.hedac.beta:g}")
    for i, m in enumerate(sc.fleet):
        print(f"uav[{i}]: {m.spec.name} ({m.spec.type}) at ({m.state.x:g}, {m.state.y:g})")
    for w in sc.warnings:
        print(f"warning: {w}")
    print("configuration valid")
    return EXIT_OK


def cmd_incline(args) -> int:
    cfg = _load(args)
    try:
        mesh = load_mesh(cfg.mesh_path)
    except (OSError, MeshParseError, MeshValidationError) as exc:
        raise ConfigError(str(exc)) from exc
    # one row per aircraft type; preset copies are named "UAV A #3" and so on
    seen, fleet, names = set(), [], []
    for m in cfg.fleet:
        name = m.spec.name.split(" #")[0]
        key = (name, m.spec.h_min, m.spec.delta)
        if key not in seen:
            seen.add(key)
            fleet.append(m.spec)
            names.append(name)
    report = incline_audit(mesh, fleet, names)
    print(report.table())
    return EXIT_OK if report.all_compatible or cfg.override_incline else EXIT_INVALID


def cmd_run(args) -> int:
    if not args.out:
        raise ConfigError("run needs --out DIR")
    sc = prepare(_load(args))
    for w in sc.warnings:
        log.warning(w)
    out = Path(args.out)
    n = sc.config.n_steps

    def progress(k, rec):
        if k % 100 == 0 or k == n:
            log.info("step %d/%d  t=%g  eta=%.4f  %.3f s", k, n, rec.t, rec.eta, rec.compute_seconds)

    res = run(sc, out, progress=progress)
    s = res.summary
    print(f"final eta: {s['final_eta']:.4f}")
    print(f"step compute: mean {s['mean_step_seconds']:.3f} s, max {s['max_step_seconds']:.3f} s")
    print(f"escape activations: {s['escape_activations']}")
    print(f"invariant violations: {len(res.violations)}")
    print(f"artifacts written to {out}")
    if res.violations:
        for v in res.violations[:20]:
            print(f"violation: {v}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


def _read_run(run_dir: Path):
    traj, met = run_dir / "trajectory.csv", run_dir / "metrics.csv"
    if not (traj.exists() and met.exists()):
        raise ConfigError(f"{run_dir}: no run artifacts (trajectory.csv, metrics.csv)")
    with open(traj, newline="") as fh:
        rows = list(csv.DictReader(fh))
    with open(met, newline="") as fh:
        metrics = list(csv.DictReader(fh))
    if len(metrics) < 2 or not rows:
        raise ConfigError(f"{run_dir}: run has no completed steps")
    return rows, metrics


def cmd_export_plots(args) -> int:
    if not args.out:
        raise ConfigError("export-plots needs --out RUN_DIR")
    cfg = _load(args)
    run_dir = Path(args.out)
    rows, metrics = _read_run(run_dir)
    mesh = load_mesh(cfg.mesh_path)
    terrain = Terrain(mesh, load_dem(cfg.dem_path) if cfg.dem_path else None)
    plots = run_dir / "plots"
    plots.mkdir(exist_ok=True)
    dt = cfg.dt
    ids = sorted({int(r["uav_id"]) for r in rows})
    for i in ids:
        spec = cfg.fleet[i].spec
        mine = [r for r in rows if int(r["uav_id"]) == i]
        a = {k: np.array([float(r[k]) for r in mine]) for k in mine[0] if k != "uav_id"}
        zt = terrain.height(np.column_stack([a["x"], a["y"]]))
        a_s = np.diff(a["v_s"]) / dt
        a_z = np.diff(a["v_z"]) / dt
        t = a["t"][1:]
        tables = {
            "controls": (["t", "rho", "phi", "omega"], [t, a["rho"][1:], a["phi"][1:], a["omega"][1:]]),
            "velocity": (["t", "v_s", "v_z"], [t, a["v_s"][1:], a["v_z"][1:]]),
            "acceleration": (["t", "a_s", "a_z"], [t, a_s, a_z]),
            "altitude": (
                ["t", "z", "z_T", "h_min_band", "h_goal_band"],
                [t, a["z"][1:], zt[1:], zt[1:] + spec.h_min, zt[1:] + spec.h_goal],
            ),
        }
        for name, (header, cols) in tables.items():
            with open(plots / f"uav{i}_{name}.csv", "w", newline="") as fh:
                w = csv.writer(fh)
                w.writerow(header)
                w.writerows(np.column_stack(cols).tolist())
    with open(plots / "eta.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t", "eta"])
        for r in metrics[1:]:
            w.writerow([r["t"], r["eta"]])
    print(f"plot data written to {plots}")
    return EXIT_OK


COMMANDS = {"run": cmd_run, "validate": cmd_validate, "incline": cmd_incline, "export-plots": cmd_export_plots}


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="uavsearch", description="Terrain-following multi-UAV search simulator")
    p.add_argument("command", choices=sorted(COMMANDS))
    p.add_argument("--config", required=True, help="scenario TOML file")
    p.add_argument("--out", help="output directory (run) or run directory (export-plots)")
    p.add_argument("--override-incline", action="store_true", help="run even if terrain is steeper than supported")
    p.add_argument("--snapshot-stride", type=int, help="write field snapshots every N steps (0: end only)")
    p.add_argument("--seed", type=int, help="recorded seed (the pipeline is deterministic)")
    p.add_argument("-v", "--verbose", action="store_true")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (ConfigError, SpecError, MeshParseError, MeshValidationError, FileNotFoundError) as exc:
        print(f"invalid: {exc}", file=sys.stderr)
        return EXIT_INVALID
    except Exception as exc:  # noqa: BLE001 - report any runtime failure as exit 3
        log.exception("run failed")
        print(f"runtime failure: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
