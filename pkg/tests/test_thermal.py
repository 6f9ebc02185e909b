import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from airflowsim.thermal import (
    DomainError,
    DuctAir,
    PhysicalConstants,
    RoomState,
    airflow_sample,
    internal_gain_w,
    step_room,
    volumetric_flow,
)

CONST = PhysicalConstants()
DUCT = DuctAir(12.8, 100.0)

alphas = st.floats(min_value=0.0, max_value=89.0)
temps = st.floats(min_value=-10.0, max_value=45.0)
volumes = st.floats(min_value=10.0, max_value=1000.0)
steps = st.floats(min_value=0.01, max_value=5.0)


def test_closed_damper_passes_no_air():
    assert volumetric_flow(0.0, DUCT, CONST) == 0.0


def test_flow_at_45_degrees():
    # 100 m/min * 0.25 m2 * tan 45
    assert volumetric_flow(45.0, DUCT, CONST) == pytest.approx(25.0, rel=1e-12)


def test_flow_for_reference_first_tick_angle():
    assert volumetric_flow(3.754, DUCT, CONST) == pytest.approx(1.6406, abs=1e-3)


@pytest.mark.parametrize("alpha", [-0.1, 90.0, 120.0, math.nan])
def test_flow_rejects_angles_outside_domain(alpha):
    with pytest.raises(DomainError):
        volumetric_flow(alpha, DUCT, CONST)


@pytest.mark.parametrize(
    "occupants, per_person, misc, expected",
    [(0, 100.0, 0.0, 0.0), (3, 100.0, 0.0, 300.0), (2, 100.0, 250.0, 450.0)],
)
def test_internal_gain(occupants, per_person, misc, expected):
    state = RoomState(22.0, 150.0, occupants)
    assert internal_gain_w(state, PhysicalConstants(heat_per_person_w=per_person), misc) == expected


def test_internal_gain_rejects_negative_misc():
    with pytest.raises(DomainError):
        internal_gain_w(RoomState(22.0, 150.0), CONST, -1.0)


def test_step_with_closed_damper_and_no_gain_is_identity():
    state = RoomState(24.0, 150.0)
    assert step_room(state, 0.0, DUCT, CONST).temperature_c == 24.0


def test_step_hand_value():
    # f = 0.010938 chosen by hand; solve for the matching angle
    volume = 150.0
    f = 0.010938
    alpha = math.degrees(math.atan(f * volume / (DUCT.speed_m_per_min * CONST.damper_area_m2)))
    new = step_room(RoomState(24.0, volume), alpha, DUCT, CONST)
    assert new.temperature_c == pytest.approx(23.8775, abs=1e-3)


def test_mixing_fraction_clamps_at_one():
    sample = airflow_sample(80.0, DUCT, CONST, volume_m3=10.0, dt_min=1.0)
    assert sample.mixing_fraction == 1.0
    assert sample.saturated
    new = step_room(RoomState(30.0, 10.0), 80.0, DUCT, CONST)
    assert new.temperature_c == DUCT.temperature_c


def test_occupants_unchanged_by_step():
    new = step_room(RoomState(24.0, 150.0, 4), 10.0, DUCT, CONST)
    assert new.occupants == 4


@pytest.mark.parametrize(
    "kwargs",
    [dict(temperature_c=20.0, volume_m3=0.0), dict(temperature_c=math.inf, volume_m3=1.0),
     dict(temperature_c=20.0, volume_m3=1.0, occupants=-1), dict(temperature_c=20.0, volume_m3=1.0, occupants=1.5)],
)
def test_room_state_invariants(kwargs):
    with pytest.raises(DomainError):
        RoomState(**kwargs)


def test_step_rejects_nonpositive_dt_and_nan():
    state = RoomState(24.0, 150.0)
    with pytest.raises(DomainError):
        step_room(state, 5.0, DUCT, CONST, dt_min=0.0)
    with pytest.raises(DomainError):
        step_room(state, 5.0, DUCT, CONST, misc_w=math.nan)


@given(alpha=alphas, temp=temps, k_out=temps, volume=volumes, dt=steps)
def test_convex_mixing_without_gains(alpha, temp, k_out, volume, dt):
    new = step_room(RoomState(temp, volume), alpha, DuctAir(k_out, 100.0), CONST, dt_min=dt).temperature_c
    lo, hi = min(temp, k_out), max(temp, k_out)
    assert lo - 1e-12 <= new <= hi + 1e-12


@given(temp=temps, volume=volumes, dt=steps)
def test_zero_flow_zero_gain_is_exact(temp, volume, dt):
    assert step_room(RoomState(temp, volume), 0.0, DUCT, CONST, dt_min=dt).temperature_c == temp


@given(a=st.floats(min_value=0.01, max_value=89.0), b=st.floats(min_value=0.01, max_value=89.0))
def test_flow_strictly_increasing(a, b):
    if a < b:
        assert volumetric_flow(a, DUCT, CONST) < volumetric_flow(b, DUCT, CONST)


@settings(max_examples=50)
@given(alpha=st.floats(min_value=0.5, max_value=30.0), n=st.integers(min_value=1, max_value=60))
def test_constant_angle_matches_closed_form(alpha, n):
    volume, t0 = 150.0, 24.0
    f = volumetric_flow(alpha, DUCT, CONST) / volume
    state = RoomState(t0, volume)
    temps_seen = [t0]
    for _ in range(n):
        state = step_room(state, alpha, DUCT, CONST)
        temps_seen.append(state.temperature_c)
    assert all(b < a for a, b in zip(temps_seen, temps_seen[1:]))
    assert all(t > DUCT.temperature_c for t in temps_seen)
    closed = DUCT.temperature_c + (t0 - DUCT.temperature_c) * (1 - f) ** n
    assert state.temperature_c == pytest.approx(closed, rel=1e-9)
