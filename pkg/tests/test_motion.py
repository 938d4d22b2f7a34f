import math

import pytest
from hypothesis import given, strategies as st

from uavsearch.motion import (
    PRESETS, UAV_A, UAV_B, UAV_C, UAVSpec, UAVState, limit_velocity, step_state, velocity_components,
)
from uavsearch.terrain import SpecError


def test_limit_velocity_examples():
    assert limit_velocity(0.0, UAV_A) == pytest.approx(10.0)
    assert limit_velocity(math.pi / 2, UAV_A) == pytest.approx(5.0)
    assert limit_velocity(math.pi / 4, UAV_A) == pytest.approx(6.3246, abs=1e-4)
    assert limit_velocity(-math.pi / 2, UAV_A) == pytest.approx(3.0)
    with pytest.raises(SpecError):
        limit_velocity(0.5, UAV_C)


def test_velocity_components_examples():
    assert velocity_components(1.0, 0.0, UAV_A) == pytest.approx((10.0, 0.0))
    assert velocity_components(0.5, 0.0, UAV_A) == pytest.approx((5.0, 0.0))
    assert velocity_components(1.0, math.pi / 2, UAV_A) == pytest.approx((0.0, 5.0), abs=1e-12)
    with pytest.raises(SpecError):
        velocity_components(0.1, 0.0, UAV_C)


@pytest.mark.parametrize("spec", PRESETS.values(), ids=PRESETS.keys())
@given(rho=st.floats(0, 1), frac=st.floats(0, 1))
def test_velocities_inside_limit_ellipse(spec, rho, frac):
    phi = spec.phi_min + frac * (spec.phi_max - spec.phi_min)
    rho = spec.rho_min + rho * (1 - spec.rho_min)
    vs, vz = velocity_components(rho, phi, spec)
    vc = spec.v_z_max if vz >= 0 else -spec.v_z_min
    assert (vs / spec.v_s_max) ** 2 + (vz / vc) ** 2 <= 1 + 1e-12


def test_step_straight_and_arc():
    s = step_state(UAVState(0, 0, 100, 0, 1.0, 0.0, 0.0), 1.0, UAV_A)
    assert (s.x, s.y, s.z, s.theta) == pytest.approx((10.0, 0.0, 100.0, 0.0))
    a = step_state(UAVState(0, 0, 100, 0, 1.0, 0.0, 0.4), 1.0, UAV_A)
    # arc of radius 25 about (0, 25)
    assert math.hypot(a.x, a.y - 25.0) == pytest.approx(25.0)
    assert math.hypot(a.x, a.y) == pytest.approx(2 * 25.0 * math.sin(0.2))
    assert a.theta == pytest.approx(0.4)
    h = step_state(UAVState(5, 6, 100, 1.0, 0.0, 0.0, 0.3), 2.0, UAV_A)
    assert (h.x, h.y, h.z, h.theta, h.t) == pytest.approx((5, 6, 100, 1.6, 2.0))


@given(st.floats(-0.4, 0.4), st.floats(0, 1), st.floats(-1.5, 1.5), st.integers(1, 20))
def test_arc_integration_matches_fine_euler(omega, rho, phi, n):
    s0 = UAVState(0.0, 0.0, 0.0, 0.7, rho, phi, omega)
    exact = step_state(s0, float(n), UAV_A)
    vs, vz = velocity_components(rho, phi, UAV_A)
    x = y = 0.0
    th = 0.7
    k = 4000
    h = n / k
    for _ in range(k):
        x += vs * h * math.cos(th + omega * h / 2)
        y += vs * h * math.sin(th + omega * h / 2)
        th += omega * h
    assert exact.x == pytest.approx(x, abs=1e-4)
    assert exact.y == pytest.approx(y, abs=1e-4)
    assert exact.z == pytest.approx(vz * n)


def test_spec_invariants():
    assert UAV_A.omega_max == pytest.approx(0.4)
    assert UAV_C.omega_max == pytest.approx(0.15)
    assert UAV_C.rho_min == pytest.approx(1 / 3)
    assert not UAV_B.problems()
    bad = UAVSpec(**{**UAV_A.__dict__, "h_min": 60.0})
    with pytest.raises(SpecError, match="h_min < h_goal"):
        bad.validate()
    wing = UAVSpec(**{**UAV_C.__dict__, "phi_max": 0.4})
    assert any("fixed-wing" in p for p in wing.problems())
