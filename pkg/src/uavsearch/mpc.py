"""Receding-horizon velocity and altitude control along a predicted search path.

The horizontal path is planned first at full speed; the optimiser only
chooses how fast and how steeply to fly along it.  A regime is the 4-vector
``W = (rho(tau1), rho(tau2), phi(tau1), phi(tau2))`` at the middle and end of
the window; with the current controls it defines quadratic profiles.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .fields import ScalarField, gradient_direction
from .guidance import Boundary, N_SWEEP, arc_point, boundary_sides, bounding_circles, build_avoidance_geometry, clamp_omega, yaw_rate_toward
from .motion import FIXED_WING, UAVSpec, UAVState, ellipse_speed, step_state
from .terrain import DomainError

EPS_C = 1e-9
MSGS_ITERATIONS = 30
MSGS_STALLS = 10
MSGS_TARGET = 1e-3
PROFILE_STEP = 1.0  # terrain sampling along the path, metres


# ----------------------------------------------------------- predicted path


@dataclass
class PredictedPath:
    tau: np.ndarray
    x: np.ndarray
    y: np.ndarray
    theta: np.ndarray
    omega: np.ndarray  # omega[k] holds on segment k; last entry repeats
    v_s_max: float
    dt: float
    s_prof: np.ndarray | None = None
    z_prof: np.ndarray | None = None

    @property
    def s(self) -> np.ndarray:
        return self.v_s_max * self.tau

    @property
    def length(self) -> float:
        return float(self.v_s_max * self.tau[-1])

    def position_at(self, s) -> tuple[np.ndarray, np.ndarray]:
        return np.interp(s, self.s, self.x), np.interp(s, self.s, self.y)

    def omega_at(self, s) -> np.ndarray:
        seg = self.v_s_max * self.dt
        k = np.clip(np.ceil(np.asarray(s) / seg - 1e-12) - 1, 0, len(self.omega) - 2).astype(int)
        return self.omega[k]

    def terrain_at(self, s) -> np.ndarray:
        return np.interp(s, self.s_prof, self.z_prof)


def _steer_clear(state, w, spec, dt, boundary):
    if boundary is None:
        return w
    g = build_avoidance_geometry(state, w, spec, dt)
    if boundary_sides(g, boundary):
        return w
    grid = np.linspace(-spec.omega_max, spec.omega_max, N_SWEEP)
    grid = grid[np.argsort(np.abs(grid - w), kind="stable")]
    centers, radii = bounding_circles(state, grid, spec, dt)
    flat = centers.reshape(-1, 2)
    inside = boundary.mesh.contains(flat)
    margin = np.where(inside, boundary.distance(flat) - radii.ravel() - spec.delta, -1e9).reshape(-1, 2).max(axis=1)
    ok = np.flatnonzero(margin >= 0)
    # no clear value: take the one closest to clearing
    return float(grid[ok[0]] if ok.size else grid[int(np.argmax(margin))])


def build_predicted_path(state: UAVState, u: ScalarField, spec: UAVSpec, dt: float,
                         first_omega: float | None = None, boundary: Boundary | None = None,
                         terrain=None) -> PredictedPath:
    """Full-speed path over ``n_pts`` steps following the frozen potential ``u``.

    ``first_omega`` (the collision-resolved yaw rate) replaces the first
    step; later steps follow the gradient, clamped and steered away from the
    boundary.  With ``terrain`` the elevation profile along the path is
    sampled once for the trial evaluations.
    """
    n = spec.n_pts
    v = spec.v_s_max
    x, y, th = np.empty(n + 1), np.empty(n + 1), np.empty(n + 1)
    om = np.empty(n + 1)
    x[0], y[0], th[0] = state.x, state.y, state.theta
    cur = state
    for k in range(n):
        if k == 0 and first_omega is not None:
            w = first_omega
        else:
            heading = (math.cos(th[k]), math.sin(th[k]))
            try:
                g = gradient_direction(u, (x[k], y[k]), fallback=heading)
            except DomainError:
                g = heading
            w = clamp_omega(yaw_rate_toward(th[k], g, dt), spec)
            if k > 0:
                w = _steer_clear(cur, w, spec, dt, boundary)
        om[k] = w
        x[k + 1], y[k + 1], th[k + 1] = arc_point(x[k], y[k], th[k], w / v, v * dt)
        cur = UAVState(x[k + 1], y[k + 1], 0.0, th[k + 1])
    om[n] = om[n - 1]
    path = PredictedPath(np.arange(n + 1) * dt, x, y, th, om, v, dt)
    if terrain is not None:
        m = max(2, int(math.ceil(path.length / PROFILE_STEP)) + 1)
        path.s_prof = np.linspace(0.0, path.length, m)
        px, py = path.position_at(path.s_prof)
        path.z_prof = terrain.height(np.column_stack([px, py]))
    return path


# ------------------------------------------------------------------ regimes


def lagrange_weights(tau: np.ndarray, tau_max: float) -> np.ndarray:
    """Basis values (len(tau), 3) of the quadratic through 0, tau_max/2, tau_max."""
    x = np.asarray(tau, dtype=float) / tau_max
    return np.column_stack([(2 * x - 1) * (x - 1), 4 * x * (1 - x), x * (2 * x - 1)])


def trial_regime(W, anchors, tau: np.ndarray):
    """Quadratic rho, phi profiles for one regime or a batch ``(B, 4)``."""
    W = np.atleast_2d(np.asarray(W, dtype=float))
    L = lagrange_weights(tau, tau[-1])
    rho0, phi0 = anchors
    b = len(W)
    rho = np.column_stack([np.full(b, rho0), W[:, 0], W[:, 1]]) @ L.T
    phi = np.column_stack([np.full(b, phi0), W[:, 2], W[:, 3]]) @ L.T
    return rho, phi


@dataclass
class TrialTrajectory:
    tau: np.ndarray
    rho: np.ndarray
    phi: np.ndarray
    s: np.ndarray
    x: np.ndarray
    y: np.ndarray
    z: np.ndarray
    omega: np.ndarray
    v_s: np.ndarray
    v_z: np.ndarray
    a_s: np.ndarray
    a_z: np.ndarray
    z_T: np.ndarray
    overrun: np.ndarray


def _trapz_weights(n: int, dt: float) -> np.ndarray:
    w = np.full(n, dt)
    w[0] = w[-1] = dt / 2
    return w


def _cumtrapz(v: np.ndarray, dt: float) -> np.ndarray:
    out = np.zeros_like(v)
    out[..., 1:] = np.cumsum(0.5 * dt * (v[..., 1:] + v[..., :-1]), axis=-1)
    return out


def build_trial(path: PredictedPath, rho, phi, spec: UAVSpec, z0: float, terrain=None) -> TrialTrajectory:
    """Trial trajectories for sampled regimes (arrays of shape (n+1,) or (B, n+1))."""
    rho = np.atleast_2d(rho)
    phi = np.atleast_2d(phi)
    dt = path.dt
    v = ellipse_speed(phi, spec.v_s_max, spec.v_z_max, spec.v_z_min)
    v_s = rho * v * np.cos(phi)
    v_z = rho * v * np.sin(phi)
    s = np.maximum.accumulate(_cumtrapz(v_s, dt), axis=-1)
    overrun = s[:, -1] > path.length * (1 + 1e-12)
    s = np.minimum(s, path.length)
    x, y = path.position_at(s)
    z = z0 + _cumtrapz(v_z, dt)
    if path.z_prof is not None:
        z_T = path.terrain_at(s)
    else:
        z_T = terrain.height(np.column_stack([x.ravel(), y.ravel()])).reshape(x.shape)
    omega = v_s / spec.v_s_max * path.omega_at(s)
    a_s = np.gradient(v_s, dt, axis=-1)
    a_z = np.gradient(v_z, dt, axis=-1)
    return TrialTrajectory(path.tau, rho, phi, s, x, y, z, omega, v_s, v_z, a_s, a_z, z_T, overrun)


def _norm(bound: float, other: float) -> float:
    # a zero bound (hovering multi-rotor) has no scale of its own
    return abs(bound) if bound != 0 else abs(other)


def objective_terms(trial: TrialTrajectory, spec: UAVSpec) -> tuple[np.ndarray, np.ndarray]:
    w = _trapz_weights(trial.tau.size, trial.tau[1] - trial.tau[0])
    tmax = trial.tau[-1]
    o_v = 1.0 - trial.rho @ w / tmax
    o_h = np.abs(trial.z - trial.z_T - spec.h_goal) @ w / (spec.h_goal * tmax)
    return o_v, o_h


def objective(trial: TrialTrajectory, spec: UAVSpec) -> np.ndarray:
    o_v, o_h = objective_terms(trial, spec)
    return o_v + o_h


CONSTRAINT_NAMES = ("h", "vs_min", "vs_max", "vz_min", "vz_max", "as_min", "as_max", "az_min", "az_max")


def constraints(trial: TrialTrajectory, spec: UAVSpec) -> np.ndarray:
    """Nine normalised violation integrals, shape (B, 9), in ``CONSTRAINT_NAMES`` order."""
    w = _trapz_weights(trial.tau.size, trial.tau[1] - trial.tau[0])
    tmax = trial.tau[-1]

    def c(excess, scale):
        return np.maximum(excess, 0.0) @ w / (scale * tmax)

    alt = trial.z - trial.z_T
    return np.column_stack([
        c(spec.h_min - alt, spec.h_min),
        c(spec.v_s_min - trial.v_s, _norm(spec.v_s_min, spec.v_s_max)),
        c(trial.v_s - spec.v_s_max, spec.v_s_max),
        c(spec.v_z_min - trial.v_z, _norm(spec.v_z_min, spec.v_z_max)),
        c(trial.v_z - spec.v_z_max, spec.v_z_max),
        c(spec.a_s_min - trial.a_s, _norm(spec.a_s_min, spec.a_s_max)),
        c(trial.a_s - spec.a_s_max, spec.a_s_max),
        c(spec.a_z_min - trial.a_z, _norm(spec.a_z_min, spec.a_z_max)),
        c(trial.a_z - spec.a_z_max, spec.a_z_max),
    ])


class RegimeProblem:
    """Vectorised objective and feasibility of regimes for one UAV and step."""

    def __init__(self, state: UAVState, path: PredictedPath, spec: UAVSpec, terrain=None):
        self.state, self.path, self.spec, self.terrain = state, path, spec, terrain
        self.anchors = (state.rho, state.phi)
        self.lower = np.array([spec.rho_min, spec.rho_min, spec.phi_min, spec.phi_min])
        self.upper = np.array([1.0, 1.0, spec.phi_max, spec.phi_max])

    def trial(self, W) -> TrialTrajectory:
        rho, phi = trial_regime(W, self.anchors, self.path.tau)
        return build_trial(self.path, rho, phi, self.spec, self.state.z, self.terrain)

    def evaluate(self, W):
        """Objective, feasibility flag and constraint matrix for a batch of regimes."""
        tr = self.trial(W)
        cons = constraints(tr, self.spec)
        sp = self.spec
        # the first sample becomes the applied control and must be admissible itself
        first_ok = (
            (tr.rho[:, 1] >= sp.rho_min - 1e-12) & (tr.rho[:, 1] <= 1 + 1e-12)
            & (tr.phi[:, 1] >= sp.phi_min - 1e-12) & (tr.phi[:, 1] <= sp.phi_max + 1e-12)
        )
        feasible = np.all(cons <= EPS_C, axis=1) & first_ok
        return objective(tr, sp), feasible, cons

    def seeds(self) -> np.ndarray:
        """Start regimes a, b, c mapped from normalised entries onto the box.

        The fixed seeds overshoot the box whenever the UAV starts far from
        them (hovering, say).  Seed a is therefore followed by a smooth
        approach to level full-speed flight (zero slope at the window end),
        and c by a smooth approach to the steepest climb: from level flight
        the quadratic through ``(0, phi_max, phi_max)`` peaks a quarter
        above ``phi_max``, past vertical for a multi-rotor.  The list ends
        with the current controls held, which is feasible unless terrain
        intervenes.
        """
        sp = self.spec

        def rho(e):
            return sp.rho_min + e * (1 - sp.rho_min)

        r0, p0 = self.anchors

        return np.array([
            [rho(1), rho(1), 0.0, 0.0],
            [1 - (1 - r0) / 4, 1.0, p0 / 4, 0.0],
            [rho(1), rho(1), sp.phi_max, sp.phi_max],
            [rho(0.5), rho(0.5), sp.phi_max, sp.phi_max],
            [1 - (1 - r0) / 4, 1.0, p0 + 0.75 * (sp.phi_max - p0), sp.phi_max],
            [r0, r0, p0, p0],
        ])


# ---------------------------------------------------------------- optimiser


@dataclass
class SearchResult:
    W: np.ndarray
    f: float
    iterations: int
    evaluations: int
    reason: str


_NEIGHBOURS = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * 4, indexing="ij")).reshape(4, -1).T
_NEIGHBOURS = _NEIGHBOURS[np.any(_NEIGHBOURS != 0, axis=1)]


def msgs_minimize(f, feasible, W0, lower, upper, iterations: int = MSGS_ITERATIONS,
                  stalls: int = MSGS_STALLS, target: float = MSGS_TARGET, evaluate=None) -> SearchResult:
    """Bounded multi-scale grid search keeping only feasible points.

    ``f`` and ``feasible`` map a batch ``(B, d)`` to ``(B,)`` arrays;
    ``evaluate`` may replace both, returning ``(values, flags)`` in one call.
    Each iteration evaluates the grid ``x + step * {-1, 0, 1}^d`` (axis and
    diagonal neighbours, clipped to the box) and moves to its best improving
    feasible point; the step halves after an iteration without improvement.
    Initial step is a quarter of each box width.
    """
    if evaluate is None:
        def evaluate(X):
            return np.asarray(f(X), dtype=float), np.asarray(feasible(X), dtype=bool)

    lower = np.asarray(lower, dtype=float)
    upper = np.asarray(upper, dtype=float)
    W = np.clip(np.asarray(W0, dtype=float), lower, upper)
    d = W.size
    if d == 4:
        offsets = _NEIGHBOURS
    else:
        offsets = np.array(np.meshgrid(*[[-1.0, 0.0, 1.0]] * d, indexing="ij")).reshape(d, -1).T
        offsets = offsets[np.any(offsets != 0, axis=1)]
    fw, _ = evaluate(W[None])
    fbest = float(fw[0])
    nevals = 1
    step = 0.25 * (upper - lower)
    stall = 0
    it = 0
    reason = "iterations"
    while True:
        if fbest <= target:
            reason = "target"
            break
        if it >= iterations:
            break
        it += 1
        cand = np.clip(W + offsets * step, lower, upper)
        vals, flags = evaluate(cand)
        nevals += len(cand)
        vals = np.where(flags, vals, np.inf)
        k = int(np.argmin(vals))
        if vals[k] < fbest:
            W, fbest = cand[k], float(vals[k])
            stall = 0
        else:
            stall += 1
            step = step / 2
            if stall >= stalls:
                reason = "stalled"
                break
    return SearchResult(W, fbest, it, nevals, reason)


def optimize_regime(problem: RegimeProblem) -> SearchResult | None:
    """Seed with the first feasible start regime and refine; ``None`` if none is feasible."""
    seeds = problem.seeds()
    vals, flags, _ = problem.evaluate(seeds)
    idx = np.flatnonzero(flags)
    if idx.size == 0:
        return None

    def ev(X):
        v, fl, _ = problem.evaluate(X)
        return v, fl

    return msgs_minimize(None, None, seeds[idx[0]], problem.lower, problem.upper, evaluate=ev)


def extract_controls(problem: RegimeProblem, W) -> tuple[float, float, float]:
    """Controls at ``tau = dt`` of the trial for regime ``W``."""
    tr = problem.trial(W)
    sp = problem.spec
    rho = float(np.clip(tr.rho[0, 1], sp.rho_min, 1.0))
    phi = float(np.clip(tr.phi[0, 1], sp.phi_min, sp.phi_max))
    omega = float(np.clip(tr.omega[0, 1], -sp.omega_max, sp.omega_max))
    return rho, phi, omega


# ------------------------------------------------------------------- escape


@dataclass
class EscapeResult:
    feasible: bool
    controls: tuple[float, float, float]
    states: list
    reason: str = ""


def _controls_from_velocity(v_s: float, v_z: float, spec: UAVSpec) -> tuple[float, float]:
    speed = math.hypot(v_s, v_z)
    if speed == 0:
        return 0.0, 0.0
    phi = math.atan2(v_z, v_s)
    vlim = float(ellipse_speed(phi, spec.v_s_max, spec.v_z_max, spec.v_z_min))
    return speed / vlim, phi


def escape_maneuver(state: UAVState, spec: UAVSpec, terrain, side: int, dt: float,
                    boundary: Boundary | None = None, tol: float = 1e-9) -> EscapeResult:
    """Decelerating climbing turn on a circle of radius ``R_min`` started at ``state``.

    Each step brakes as hard as allowed towards the minimum speed while
    raising the vertical speed as fast as the acceleration band, the limit
    ellipse and the incline limit permit.  The manoeuvre ends once the UAV
    stops horizontally or has swept a full circle.  Feasible when every
    visited state keeps ``h_min`` above terrain, velocity and acceleration
    stay in band, and the circle keeps ``delta`` from the domain edges.
    """
    sp = spec
    side = 1 if side >= 0 else -1
    v_s = state.rho * float(ellipse_speed(state.phi, sp.v_s_max, sp.v_z_max, sp.v_z_min)) * math.cos(state.phi)
    v_z = state.rho * float(ellipse_speed(state.phi, sp.v_s_max, sp.v_z_max, sp.v_z_min)) * math.sin(state.phi)
    v_s = max(v_s, 0.0)
    floor = sp.v_s_min if sp.type == FIXED_WING else 0.0
    tan_max = math.tan(sp.phi_max) if sp.phi_max < math.pi / 2 - 1e-12 else math.inf

    reason = ""
    centre = np.array([state.x - side * sp.R_min * math.sin(state.theta), state.y + side * sp.R_min * math.cos(state.theta)])
    if boundary is not None and not boundary.circles_clear(centre[None], [sp.R_min], sp.delta)[0]:
        reason = "escape circle too close to boundary"

    states = [state]
    first = None
    swept = 0.0
    cur = state
    ok_band = True
    for _ in range(100000):
        ns = max(v_s + sp.a_s_min * dt, floor)
        ns = min(ns, v_s + sp.a_s_max * dt, sp.v_s_max)
        nz = v_z + sp.a_z_max * dt
        nz = min(nz, sp.v_z_max * math.sqrt(max(0.0, 1 - (ns / sp.v_s_max) ** 2)), ns * tan_max)
        nz = max(nz, sp.v_z_min)
        if nz < v_z + sp.a_z_min * dt - tol or nz > sp.v_z_max + tol:
            ok_band = False
        rho, phi = _controls_from_velocity(ns, nz, sp)
        if not (sp.rho_min - 1e-9 <= rho <= 1 + 1e-9 and sp.phi_min - 1e-12 <= phi <= sp.phi_max + 1e-12):
            ok_band = False
        rho = min(max(rho, sp.rho_min), 1.0)
        phi = min(max(phi, sp.phi_min), sp.phi_max)
        omega = side * min(ns / sp.R_min, sp.omega_max)
        if first is None:
            first = (rho, phi, omega)
        cur = step_state(cur.with_controls(rho, phi, omega), dt, sp)
        states.append(cur)
        swept += ns * dt / sp.R_min
        v_s, v_z = ns, nz
        if v_s <= tol or swept >= 2 * math.pi:
            break
    if not ok_band and not reason:
        reason = "velocity or acceleration band violated"
    pts = np.array([[s.x, s.y] for s in states])
    alt = np.array([s.z for s in states]) - terrain.height(pts)
    if not reason and np.any(alt < sp.h_min - tol):
        reason = "terrain clearance lost"
    return EscapeResult(not reason, first, states, reason)


# --------------------------------------------------------------- step logic


@dataclass
class ControlDecision:
    controls: tuple[float, float, float]
    mode: str  # "optimal", "escape" or "escape-infeasible"
    W: np.ndarray | None = None
    objective: float | None = None


def apply_or_escape(state: UAVState, spec: UAVSpec, path: PredictedPath, terrain, side: int, dt: float,
                    boundary: Boundary | None = None) -> ControlDecision:
    """Optimal controls when an escape stays available afterwards, else escape now."""
    problem = RegimeProblem(state, path, spec, terrain)
    res = optimize_regime(problem)
    if res is not None:
        ctrl = extract_controls(problem, res.W)
        nxt = step_state(state.with_controls(*ctrl), dt, spec)
        if escape_maneuver(nxt, spec, terrain, side, dt, boundary).feasible:
            return ControlDecision(ctrl, "optimal", res.W, res.f)
    esc = escape_maneuver(state, spec, terrain, side, dt, boundary)
    return ControlDecision(esc.controls, "escape" if esc.feasible else "escape-infeasible")
