"""Scenario configuration, the closed-loop search simulation and its logs."""
from __future__ import annotations

import csv
import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import tomli

from .fields import (
    ConfigError, HedacParams, PotentialSolver, ScalarField, accumulate_coverage, init_probability,
    survey_accomplishment, undetected_probability, write_field_csv,
)
from .guidance import Boundary, desired_yaw_rate, resolve_collisions
from .motion import PRESETS, UAVSpec, UAVState, ellipse_speed, step_state
from .mpc import apply_or_escape, build_predicted_path, escape_maneuver
from .sensing import SensorSpec, sense_footprint
from .terrain import (
    DomainError, MeshParseError, MeshValidationError, SpecError, Terrain, TerrainMesh, incline_audit, load_dem,
    load_mesh,
)

TRAJECTORY_COLUMNS = ["t", "uav_id", "x", "y", "z", "theta", "rho", "phi", "omega", "v_s", "v_z"]
METRICS_COLUMNS = ["t", "eta", "step_compute_seconds"]

_SPEC_KEYS = (
    "type", "R_min", "delta", "h_min", "h_goal", "v_s_max", "v_s_min", "v_z_max", "v_z_min",
    "a_s_max", "a_s_min", "a_z_max", "a_z_min", "phi_min_deg", "phi_max_deg",
    "fov_lateral_deg", "fov_longitudinal_deg", "n_pts",
)
_STATE_KEYS = ("x", "y", "heading", "altitude", "rho", "phi")


# ------------------------------------------------------------ configuration


@dataclass
class FleetMember:
    spec: UAVSpec
    state: UAVState
    hover: bool = False


@dataclass
class ScenarioConfig:
    mesh_path: Path
    dt: float
    duration: float
    hedac: HedacParams
    fleet: list[FleetMember]
    initial_probability: dict
    dem_path: Path | None = None
    snapshot_stride: int = 0
    seed: int = 0
    override_incline: bool = False
    base_dir: Path = Path(".")

    @property
    def n_steps(self) -> int:
        return int(round(self.duration / self.dt))


def _num(table: dict, key: str, where: str) -> float:
    if key not in table:
        raise ConfigError(f"{where}: missing key {key!r}")
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"{where}: {key} must be a number, got {v!r}")
    return float(v)


def _uav_from_table(t: dict, idx: int, dt: float) -> FleetMember:
    where = f"uav[{idx}]"
    if "preset" in t:
        if t["preset"] not in PRESETS:
            raise ConfigError(f"{where}: unknown preset {t['preset']!r} (choose from {sorted(PRESETS)})")
        spec = PRESETS[t["preset"]]
        if "omega_lim" in t:
            spec = UAVSpec(**{**spec.__dict__, "omega_lim": _num(t, "omega_lim", where)})
        spec = UAVSpec(**{**spec.__dict__, "name": t.get("name", f"{spec.name} #{idx}")})
    else:
        missing = [k for k in _SPEC_KEYS if k not in t]
        if missing or "sensing" not in t:
            raise ConfigError(f"{where}: missing keys {missing + ([] if 'sensing' in t else ['sensing'])}")
        sens = t["sensing"]
        sensor = SensorSpec(
            math.radians(_num(t, "fov_lateral_deg", where)), math.radians(_num(t, "fov_longitudinal_deg", where)),
            _num(sens, "k", where + ".sensing"), _num(sens, "b", where + ".sensing"),
            _num(sens, "s", where + ".sensing"), _num(sens, "q", where + ".sensing"),
        )
        n_pts = t["n_pts"]
        if not isinstance(n_pts, int):
            raise ConfigError(f"{where}: n_pts must be an integer")
        spec = UAVSpec(
            type=t["type"], v_s_max=_num(t, "v_s_max", where), v_s_min=_num(t, "v_s_min", where),
            v_z_max=_num(t, "v_z_max", where), v_z_min=_num(t, "v_z_min", where),
            a_s_max=_num(t, "a_s_max", where), a_s_min=_num(t, "a_s_min", where),
            a_z_max=_num(t, "a_z_max", where), a_z_min=_num(t, "a_z_min", where),
            phi_min=math.radians(_num(t, "phi_min_deg", where)), phi_max=math.radians(_num(t, "phi_max_deg", where)),
            R_min=_num(t, "R_min", where), delta=_num(t, "delta", where),
            h_min=_num(t, "h_min", where), h_goal=_num(t, "h_goal", where), sensor=sensor, n_pts=n_pts,
            omega_lim=_num(t, "omega_lim", where) if "omega_lim" in t else None,
            name=t.get("name", f"uav {idx}"),
        )
    missing = [k for k in _STATE_KEYS if k not in t]
    if missing:
        raise ConfigError(f"{where}: missing initial state keys {missing}")
    # altitude is given above terrain; resolved once the mesh is loaded
    state = UAVState(_num(t, "x", where), _num(t, "y", where), _num(t, "altitude", where),
                     math.radians(_num(t, "heading", where)), _num(t, "rho", where),
                     math.radians(_num(t, "phi", where)), 0.0, 0.0)
    return FleetMember(spec, state, bool(t.get("hover", False)))


def parse_config(data: dict, base_dir=".") -> ScenarioConfig:
    """Build a config from a parsed TOML document; structural errors raise ConfigError."""
    base_dir = Path(base_dir)
    sc = data.get("scenario")
    if not isinstance(sc, dict):
        raise ConfigError("missing [scenario] table")
    if "mesh" not in sc:
        raise ConfigError("scenario: missing key 'mesh'")
    dt = _num(sc, "dt", "scenario")
    duration = _num(sc, "duration", "scenario")
    hd = data.get("hedac")
    if not isinstance(hd, dict):
        raise ConfigError("missing [hedac] table")
    alpha, beta = _num(hd, "alpha", "hedac"), _num(hd, "beta", "hedac")
    if not (alpha > 0 and beta > 0):
        raise ConfigError(f"hedac: alpha and beta must be positive (alpha={alpha}, beta={beta})")
    if not dt > 0:
        raise ConfigError(f"scenario: dt must be positive, got {dt}")
    if duration < 0 or abs(duration / dt - round(duration / dt)) > 1e-9:
        raise ConfigError(f"scenario: duration must be a nonnegative multiple of dt (duration={duration}, dt={dt})")
    uavs = data.get("uav") or []
    if not uavs:
        raise ConfigError("fleet is empty: add at least one [[uav]] table")
    fleet = [_uav_from_table(t, i, dt) for i, t in enumerate(uavs)]
    ip = data.get("initial_probability", {"kind": "uniform"})
    out = data.get("output", {})
    stride = out.get("snapshot_stride", 0)
    if not isinstance(stride, int) or stride < 0:
        raise ConfigError("output: snapshot_stride must be a nonnegative integer")

    def rel(p):
        p = Path(p)
        return p if p.is_absolute() else base_dir / p

    return ScenarioConfig(
        mesh_path=rel(sc["mesh"]), dt=dt, duration=duration, hedac=HedacParams(alpha, beta), fleet=fleet,
        initial_probability=ip, dem_path=rel(sc["dem"]) if sc.get("dem") else None,
        snapshot_stride=stride, seed=int(sc.get("seed", 0)),
        override_incline=bool(sc.get("override_incline", False)), base_dir=base_dir,
    )


def load_config(path) -> ScenarioConfig:
    path = Path(path)
    try:
        with open(path, "rb") as fh:
            data = tomli.load(fh)
    except tomli.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}") from exc
    return parse_config(data, path.parent)


@dataclass
class Scenario:
    """A validated configuration with its loaded terrain."""

    config: ScenarioConfig
    mesh: TerrainMesh
    terrain: Terrain
    boundary: Boundary
    fleet: list[FleetMember]
    warnings: list[str] = field(default_factory=list)


def degenerate_fov(spec: UAVSpec) -> bool:
    """True when the lateral footprint at ``h_goal`` is narrower than the tightest turn."""
    return 2 * spec.h_goal * math.tan(spec.sensor.gamma_lat / 2) < 2 * spec.R_min


def prepare(config: ScenarioConfig) -> Scenario:
    """Load terrain and check every static requirement; raises ConfigError listing all findings."""
    try:
        mesh = load_mesh(config.mesh_path)
        dem = load_dem(config.dem_path) if config.dem_path else None
    except (OSError, MeshParseError, MeshValidationError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    terrain = Terrain(mesh, dem)
    boundary = Boundary(mesh)
    errors, warnings, fleet = [], [], []
    for i, m in enumerate(config.fleet):
        errors += [f"uav[{i}]: {p}" for p in m.spec.problems()]
    if errors:
        raise ConfigError("\n".join(errors))
    for i, m in enumerate(config.fleet):
        sp, s0 = m.spec, m.state
        if not mesh.contains([[s0.x, s0.y]])[0]:
            errors.append(f"uav[{i}]: initial position ({s0.x}, {s0.y}) lies outside the search domain")
            fleet.append(m)
            continue
        z = float(terrain.height([[s0.x, s0.y]])[0]) + s0.z
        state = UAVState(s0.x, s0.y, z, s0.theta, s0.rho, s0.phi, 0.0, 0.0)
        if s0.z < sp.h_min:
            errors.append(f"uav[{i}]: initial altitude {s0.z} m is below h_min = {sp.h_min} m")
        if not (sp.rho_min - 1e-12 <= s0.rho <= 1 + 1e-12):
            errors.append(f"uav[{i}]: initial rho {s0.rho} outside [{sp.rho_min}, 1]")
        if not (sp.phi_min - 1e-12 <= s0.phi <= sp.phi_max + 1e-12):
            errors.append(f"uav[{i}]: initial phi outside the incline limits")
        d = float(boundary.distance([[s0.x, s0.y]])[0])
        if d < sp.delta:
            errors.append(f"uav[{i}]: initial position is {d:.1f} m from the domain boundary (< delta = {sp.delta})")
        if degenerate_fov(sp):
            warnings.append(
                f"uav[{i}]: lateral footprint at h_goal ({2 * sp.h_goal * math.tan(sp.sensor.gamma_lat / 2):.1f} m) "
                f"is narrower than the minimum turn diameter ({2 * sp.R_min:.1f} m); the UAV may circle without "
                "covering new ground"
            )
        if sp.omega_lim < sp.v_s_max / sp.R_min:
            warnings.append(f"uav[{i}]: omega_lim below v_s_max/R_min; escape turns will be wider than R_min")
        fleet.append(FleetMember(sp, state, m.hover))
    for i in range(len(fleet)):
        for j in range(i + 1, len(fleet)):
            a, b = fleet[i].state, fleet[j].state
            d = math.hypot(a.x - b.x, a.y - b.y)
            need = max(fleet[i].spec.delta, fleet[j].spec.delta)
            if d < need:
                errors.append(f"uav[{i}] and uav[{j}] start {d:.1f} m apart (< {need})")
    report = incline_audit(mesh, [m.spec for m in config.fleet], [m.spec.name for m in config.fleet])
    if not report.all_compatible:
        msg = "terrain incline exceeds what the fleet supports:\n" + report.table()
        if config.override_incline:
            warnings.append(msg + "\n(continuing: incline check overridden)")
        else:
            errors.append(msg)
    try:
        init_probability(config.initial_probability, mesh, config.base_dir)
    except (ConfigError, OSError, KeyError, ValueError) as exc:
        errors.append(f"initial_probability: {exc}")
    if errors:
        raise ConfigError("\n".join(errors))
    return Scenario(config, mesh, terrain, boundary, fleet, warnings)


# --------------------------------------------------------------- simulation


@dataclass
class StepRecord:
    t: float
    states: list[UAVState]
    eta: float
    compute_seconds: float
    modes: list[str] = field(default_factory=list)


def velocities(state: UAVState, spec: UAVSpec) -> tuple[float, float]:
    v = float(ellipse_speed(state.phi, spec.v_s_max, spec.v_z_max, spec.v_z_min))
    return state.rho * v * math.cos(state.phi), state.rho * v * math.sin(state.phi)


class Simulation:
    """Closed-loop search over a prepared scenario, one control step at a time."""

    def __init__(self, scenario: Scenario):
        self.sc = scenario
        cfg = scenario.config
        self.dt = cfg.dt
        self.specs = [m.spec for m in scenario.fleet]
        self.hover = [m.hover for m in scenario.fleet]
        self.states = [m.state for m in scenario.fleet]
        self.sides = [1] * len(self.states)
        self.solver = PotentialSolver(scenario.mesh, cfg.hedac)
        self.m0 = init_probability(cfg.initial_probability, scenario.mesh, cfg.base_dir)
        self.c = ScalarField(scenario.mesh, np.zeros(scenario.mesh.n_nodes))
        self.m = self.m0
        self.t = 0.0
        self.records = [StepRecord(0.0, list(self.states), 0.0, 0.0, ["initial"] * len(self.states))]

    @property
    def eta(self) -> float:
        return survey_accomplishment(self.m)

    def step(self) -> StepRecord:
        sc, dt = self.sc, self.dt
        t0 = time.perf_counter()
        u = self.solver.solve(self.m)
        cand = [
            0.0 if hov else desired_yaw_rate(s, u, dt, sp)
            for s, sp, hov in zip(self.states, self.specs, self.hover)
        ]
        res = resolve_collisions(self.states, self.specs, cand, dt, sc.boundary, self.sides)
        self.sides = res.sides
        new, modes = [], []
        for i, (s, sp) in enumerate(zip(self.states, self.specs)):
            if self.hover[i]:
                ctrl, mode = (s.rho, s.phi, s.omega), "hover"
            elif res.failed[i]:
                esc = escape_maneuver(s, sp, sc.terrain, self.sides[i], dt, sc.boundary)
                ctrl, mode = esc.controls, "escape" if esc.feasible else "escape-infeasible"
            else:
                path = build_predicted_path(s, u, sp, dt, res.omegas[i], sc.boundary, sc.terrain)
                dec = apply_or_escape(s, sp, path, sc.terrain, self.sides[i], dt, sc.boundary)
                ctrl, mode = dec.controls, dec.mode
            rho = min(max(ctrl[0], sp.rho_min), 1.0)
            phi = min(max(ctrl[1], sp.phi_min), sp.phi_max)
            omega = min(max(ctrl[2], -sp.omega_max), sp.omega_max)
            new.append(step_state(s.with_controls(rho, phi, omega), dt, sp))
            modes.append(mode)
        c = self.c
        for s, sp in zip(new, self.specs):
            c = accumulate_coverage(c, sense_footprint(s, sp.sensor, sc.terrain), dt)
        self.c = c
        self.m = undetected_probability(self.m0, c)
        eta = self.eta
        elapsed = time.perf_counter() - t0
        self.states = new
        self.t = new[0].t
        rec = StepRecord(self.t, list(new), eta, elapsed, modes)
        self.records.append(rec)
        return rec


@dataclass
class RunResult:
    records: list[StepRecord]
    summary: dict
    violations: list[str]
    simulation: Simulation


def run(config: ScenarioConfig | Scenario, out_dir=None, progress=None, check=True) -> RunResult:
    """Simulate the whole duration; writes logs to ``out_dir`` when given."""
    scenario = config if isinstance(config, Scenario) else prepare(config)
    cfg = scenario.config
    sim = Simulation(scenario)
    out = Path(out_dir) if out_dir is not None else None
    writer = _RunWriter(out, scenario) if out is not None else None
    try:
        if writer:
            writer.record(sim.records[0])
        for k in range(1, cfg.n_steps + 1):
            rec = sim.step()
            if writer:
                writer.record(rec)
                if cfg.snapshot_stride and k % cfg.snapshot_stride == 0:
                    writer.snapshot(sim, k)
            if progress:
                progress(k, rec)
    finally:
        if writer:
            writer.close()
    if writer:
        writer.snapshot(sim, cfg.n_steps)
    violations = check_invariants(sim.records, sim.specs, scenario.terrain, scenario.boundary, cfg.dt) if check else []
    summary = metrics_summary(sim.records, sim.specs, scenario.terrain)
    summary["invariant_violations"] = len(violations)
    if out is not None:
        with open(out / "summary.json", "w") as fh:
            json.dump(summary, fh, indent=2)
        if violations:
            (out / "violations.txt").write_text("\n".join(violations) + "\n")
    return RunResult(sim.records, summary, violations, sim)


class _RunWriter:
    def __init__(self, out: Path, scenario: Scenario):
        self.out = out
        out.mkdir(parents=True, exist_ok=True)
        (out / "fields").mkdir(exist_ok=True)
        self.specs = [m.spec for m in scenario.fleet]
        self._traj = open(out / "trajectory.csv", "w", newline="")
        self._met = open(out / "metrics.csv", "w", newline="")
        self._modes = open(out / "modes.csv", "w", newline="")
        self.traj = csv.writer(self._traj)
        self.met = csv.writer(self._met)
        self.modes = csv.writer(self._modes)
        self.traj.writerow(TRAJECTORY_COLUMNS)
        self.met.writerow(METRICS_COLUMNS)
        self.modes.writerow(["t", "uav_id", "mode"])
        meta = {
            "dt": scenario.config.dt,
            "mesh": str(scenario.config.mesh_path.resolve()),
            "uavs": [{"name": sp.name, "h_min": sp.h_min, "h_goal": sp.h_goal} for sp in self.specs],
        }
        (out / "run.json").write_text(json.dumps(meta, indent=2))

    def record(self, rec: StepRecord):
        for i, (s, sp) in enumerate(zip(rec.states, self.specs)):
            vs, vz = velocities(s, sp)
            self.traj.writerow([repr(rec.t), i] + [repr(float(v)) for v in (s.x, s.y, s.z, s.theta, s.rho, s.phi, s.omega, vs, vz)])
            self.modes.writerow([repr(rec.t), i, rec.modes[i] if rec.modes else ""])
        self.met.writerow([repr(rec.t), repr(rec.eta), repr(rec.compute_seconds)])

    def snapshot(self, sim: Simulation, k: int):
        write_field_csv(sim.m, self.out / "fields" / f"undetected_{k:06d}.csv")
        write_field_csv(sim.c, self.out / "fields" / f"coverage_{k:06d}.csv")

    def close(self):
        for fh in (self._traj, self._met, self._modes):
            fh.close()


# ------------------------------------------------------------------ metrics


def metrics_summary(records: list[StepRecord], specs, terrain) -> dict:
    if not records:
        raise ValueError("no records")
    eta = [r.eta for r in records]
    comp = [r.compute_seconds for r in records[1:]]
    min_pair = math.inf
    min_alt = math.inf
    for r in records:
        xy = np.array([[s.x, s.y] for s in r.states])
        zt = terrain.height(xy)
        min_alt = min(min_alt, float(np.min([s.z for s in r.states] - zt)))
        for i in range(len(xy)):
            for j in range(i + 1, len(xy)):
                min_pair = min(min_pair, float(np.hypot(*(xy[i] - xy[j]))))
    escapes = sum(m.startswith("escape") for r in records[1:] for m in r.modes)
    return {
        "final_eta": eta[-1],
        "eta": eta,
        "max_step_seconds": max(comp) if comp else 0.0,
        "mean_step_seconds": float(np.mean(comp)) if comp else 0.0,
        "escape_activations": escapes,
        "min_pairwise_distance": min_pair if math.isfinite(min_pair) else None,
        "min_altitude_above_terrain": min_alt,
    }


def check_invariants(records: list[StepRecord], specs, terrain, boundary: Boundary | None, dt: float,
                     tol: float = 1e-6) -> list[str]:
    """Every motion, altitude and clearance rule over a run, one message per violation.

    Bounds are compared after normalisation by the bound magnitude, with
    relative slack ``tol``.
    """
    out = []
    n = len(specs)
    prev = None
    for r in records:
        xy = np.array([[s.x, s.y] for s in r.states])
        zt = terrain.height(xy)
        vel = [velocities(s, sp) for s, sp in zip(r.states, specs)]
        for i, (s, sp) in enumerate(zip(r.states, specs)):
            tag = f"t={r.t:g} uav {i}"
            if not (sp.rho_min - tol <= s.rho <= 1 + tol):
                out.append(f"{tag}: rho {s.rho} out of band")
            if not (sp.phi_min - tol <= s.phi <= sp.phi_max + tol):
                out.append(f"{tag}: phi {s.phi} out of band")
            if abs(s.omega) > sp.omega_max * (1 + tol):
                out.append(f"{tag}: |omega| {abs(s.omega)} > {sp.omega_max}")
            alt = s.z - zt[i]
            if alt < sp.h_min * (1 - tol):
                out.append(f"{tag}: altitude {alt:.3f} below h_min {sp.h_min}")
            vs, vz = vel[i]
            vc = sp.v_z_max if vz >= 0 else -sp.v_z_min
            if (vs / sp.v_s_max) ** 2 + (vz / vc) ** 2 > 1 + tol:
                out.append(f"{tag}: velocity ({vs:.3f}, {vz:.3f}) outside limit ellipse")
            if vs < sp.v_s_min - tol * sp.v_s_max:
                out.append(f"{tag}: v_s {vs} below v_s_min")
            if prev is not None:
                pvs, pvz = prev[i]
                a_s, a_z = (vs - pvs) / dt, (vz - pvz) / dt
                if a_s > sp.a_s_max * (1 + tol) or a_s < sp.a_s_min * (1 + tol):
                    out.append(f"{tag}: a_s {a_s:.4f} out of band")
                if a_z > sp.a_z_max * (1 + tol) or a_z < sp.a_z_min * (1 + tol):
                    out.append(f"{tag}: a_z {a_z:.4f} out of band")
            if boundary is not None:
                inside = boundary.mesh.contains(xy[i:i + 1])[0]
                d = float(boundary.distance(xy[i:i + 1])[0])
                if not inside or d < sp.delta * (1 - tol):
                    out.append(f"{tag}: boundary clearance {d:.3f} < delta {sp.delta} (inside={inside})")
        for i in range(n):
            for j in range(i + 1, n):
                d = float(np.hypot(*(xy[i] - xy[j])))
                need = max(specs[i].delta, specs[j].delta)
                if d < need * (1 - tol):
                    out.append(f"t={r.t:g} uavs {i},{j}: separation {d:.3f} < {need}")
        prev = vel
    return out


__all__ = [
    "ScenarioConfig", "FleetMember", "Scenario", "StepRecord", "RunResult", "Simulation", "load_config",
    "parse_config", "prepare", "run", "metrics_summary", "check_invariants", "degenerate_fov",
    "DomainError", "SpecError",
]
