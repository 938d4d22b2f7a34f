"""Kinematic UAV model: limit-velocity ellipse and constant-turn-rate integration."""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .sensing import SensorSpec, SENSOR_A, SENSOR_B, SENSOR_C
from .terrain import SpecError

MULTI_ROTOR = "multi-rotor"
FIXED_WING = "fixed-wing"

# default yaw-rate limits; not listed with the other aircraft parameters
DEFAULT_OMEGA_LIM = {MULTI_ROTOR: 1.0, FIXED_WING: 0.3}


@dataclass(frozen=True)
class UAVSpec:
    """Motion, sensing and control limits of one aircraft type."""

    type: str
    v_s_max: float
    v_s_min: float
    v_z_max: float
    v_z_min: float
    a_s_max: float
    a_s_min: float
    a_z_max: float
    a_z_min: float
    phi_min: float
    phi_max: float
    R_min: float
    delta: float
    h_min: float
    h_goal: float
    sensor: SensorSpec
    n_pts: int
    omega_lim: float | None = None
    name: str = "uav"

    def __post_init__(self):
        if self.omega_lim is None:
            object.__setattr__(self, "omega_lim", DEFAULT_OMEGA_LIM.get(self.type, 1.0))

    @property
    def rho_min(self) -> float:
        return self.v_s_min / self.v_s_max

    @property
    def omega_max(self) -> float:
        return min(self.omega_lim, self.v_s_max / self.R_min)

    def problems(self) -> list[str]:
        """Human-readable list of violated invariants (empty when valid)."""
        out = []
        if self.type not in (MULTI_ROTOR, FIXED_WING):
            out.append(f"type must be {MULTI_ROTOR!r} or {FIXED_WING!r}, got {self.type!r}")
        if not self.v_s_min >= 0:
            out.append("v_s_min must be >= 0")
        if not self.v_s_min < self.v_s_max:
            out.append("v_s_min must be < v_s_max")
        if not (self.v_z_max > 0 and self.v_z_min < 0):
            out.append("v_z_max must be > 0 and v_z_min < 0")
        if not (self.a_s_min < 0 < self.a_s_max and self.a_z_min < 0 < self.a_z_max):
            out.append("acceleration bands must satisfy a_min < 0 < a_max")
        if not self.phi_min < 0 < self.phi_max:
            out.append("incline limits must satisfy phi_min < 0 < phi_max")
        if self.type == MULTI_ROTOR:
            if not (math.isclose(self.phi_min, -math.pi / 2) and math.isclose(self.phi_max, math.pi / 2)):
                out.append("multi-rotor incline limits must be +/- pi/2")
            if self.v_s_min != 0:
                out.append("multi-rotor v_s_min must be 0")
        if self.type == FIXED_WING:
            if max(abs(self.phi_min), abs(self.phi_max)) > 0.25:
                out.append("fixed-wing incline limits must satisfy |phi| <= 0.25 rad")
            if not self.v_s_min > 0:
                out.append("fixed-wing v_s_min must be > 0")
        if not self.R_min > 0:
            out.append("R_min must be > 0")
        if not self.delta > 0:
            out.append("delta must be > 0")
        if not 0 < self.h_min < self.h_goal:
            out.append(f"h_min < h_goal required (h_min={self.h_min}, h_goal={self.h_goal})")
        if not self.omega_lim > 0:
            out.append("omega_lim must be > 0")
        if not (isinstance(self.n_pts, int) and self.n_pts >= 2):
            out.append("n_pts must be an integer >= 2")
        out += self.sensor.problems()
        return out

    def validate(self) -> "UAVSpec":
        errs = self.problems()
        if errs:
            raise SpecError(f"{self.name}: " + "; ".join(errs))
        return self


@dataclass(frozen=True)
class UAVState:
    x: float
    y: float
    z: float
    theta: float
    rho: float = 0.0
    phi: float = 0.0
    omega: float = 0.0
    t: float = 0.0

    @property
    def xy(self) -> tuple[float, float]:
        return (self.x, self.y)

    def with_controls(self, rho: float, phi: float, omega: float) -> "UAVState":
        return replace(self, rho=rho, phi=phi, omega=omega)


def _check_phi(phi: float, spec: UAVSpec) -> None:
    if not spec.phi_min - 1e-12 <= phi <= spec.phi_max + 1e-12:
        raise SpecError(f"incline {phi} outside [{spec.phi_min}, {spec.phi_max}]")


def ellipse_speed(phi, v_s_max, v_z_max, v_z_min):
    """Quarter-ellipse limit speed; array friendly and unchecked."""
    vc = np.where(phi >= 0, v_z_max, -v_z_min)
    c = np.cos(phi)
    s = np.sin(phi)
    return 1.0 / np.sqrt((c / v_s_max) ** 2 + (s / vc) ** 2)


def limit_velocity(phi: float, spec: UAVSpec) -> float:
    _check_phi(phi, spec)
    vc = spec.v_z_max if phi >= 0 else -spec.v_z_min
    return 1.0 / math.sqrt((math.cos(phi) / spec.v_s_max) ** 2 + (math.sin(phi) / vc) ** 2)


def velocity_components(rho: float, phi: float, spec: UAVSpec) -> tuple[float, float]:
    if not spec.rho_min - 1e-12 <= rho <= 1 + 1e-12:
        raise SpecError(f"velocity intensity {rho} outside [{spec.rho_min}, 1]")
    v = limit_velocity(phi, spec)
    return max(rho * v * math.cos(phi), 0.0), rho * v * math.sin(phi)


def arc_displacement(theta: float, curvature_rate: float, length_rate: float, dt: float) -> tuple[float, float, float]:
    """Displacement (dx, dy) and new heading for speed ``length_rate`` and yaw rate ``curvature_rate``."""
    theta1 = theta + curvature_rate * dt
    if abs(curvature_rate) < 1e-9:
        return length_rate * dt * math.cos(theta), length_rate * dt * math.sin(theta), theta1
    r = length_rate / curvature_rate
    return r * (math.sin(theta1) - math.sin(theta)), r * (math.cos(theta) - math.cos(theta1)), theta1


def step_state(state: UAVState, dt: float, spec: UAVSpec) -> UAVState:
    """Advance over ``dt`` with zero-order-hold controls (exact arc integration)."""
    v_s, v_z = velocity_components(state.rho, state.phi, spec)
    dx, dy, theta1 = arc_displacement(state.theta, state.omega, v_s, dt)
    return replace(state, x=state.x + dx, y=state.y + dy, z=state.z + v_z * dt, theta=theta1, t=state.t + dt)


# ------------------------------------------------------------ reference fleet

_MR = dict(
    type=MULTI_ROTOR, v_s_max=10.0, v_s_min=0.0, v_z_max=5.0, v_z_min=-3.0,
    a_s_max=2.0, a_s_min=-3.6, a_z_max=2.8, a_z_min=-2.0,
    phi_min=-math.pi / 2, phi_max=math.pi / 2, R_min=25.0, delta=7.0, n_pts=20,
)

UAV_A = UAVSpec(**_MR, h_min=30.0, h_goal=50.0, sensor=SENSOR_A, name="UAV A")
UAV_B = UAVSpec(**_MR, h_min=30.0, h_goal=100.0, sensor=SENSOR_B, name="UAV B")
UAV_C = UAVSpec(
    type=FIXED_WING, v_s_max=15.0, v_s_min=5.0, v_z_max=1.2, v_z_min=-1.2,
    a_s_max=2.0, a_s_min=-2.0, a_z_max=1.0, a_z_min=-1.0,
    phi_min=-math.radians(13.5), phi_max=math.radians(13.5),
    R_min=100.0, delta=60.0, h_min=100.0, h_goal=150.0, sensor=SENSOR_C, n_pts=30, name="UAV C",
)

PRESETS = {"A": UAV_A, "B": UAV_B, "C": UAV_C}
