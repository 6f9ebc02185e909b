"""Damper-angle control law and the per-minute receding-horizon loop.

Each tick the controller re-solves the angle law for the time left until the
user's deadline, using the latest room and duct readings. Under a linear
target trajectory the "next minute's partial objective" gives the same angle
as this full-horizon recomputation, so only the latter is implemented.

After the deadline the controller holds the target with a one-minute virtual
horizon and a dead-band.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import NamedTuple

from airflowsim.thermal import DuctAir, PhysicalConstants

EPSILON_CAPACITY_C = 1e-6
HOLD_HORIZON_MIN = 1.0


class ControlError(Exception):
    """Base class for angle-law failures."""


class NoCapacityError(ControlError):
    """Duct air is at room temperature, so no flow can move the room."""


class DeadlinePassedError(ControlError):
    pass


class InfeasibleError(ControlError):
    """Duct air pushes the room away from the target (or the target lies past the duct temperature)."""


class Mode(str, Enum):
    TRACKING = "tracking"
    HOLDING = "holding"
    IDLE = "idle"


class ModelVariant(str, Enum):
    # angle law exactly as published, density factor included
    PUBLISHED = "published"
    # density dropped, as a strict energy balance would have it
    DIMENSIONAL = "dimensional"


@dataclass(frozen=True)
class ControlRequest:
    target_temperature_c: float
    deadline_min: float

    def __post_init__(self) -> None:
        if not math.isfinite(self.target_temperature_c):
            raise ValueError("target_temperature_c must be finite")
        if not (math.isfinite(self.deadline_min) and self.deadline_min > 0):
            raise ValueError(f"deadline_min must be > 0, got {self.deadline_min}")


@dataclass(frozen=True)
class DamperCommand:
    alpha_deg: float = 0.0
    saturated: bool = False
    issued_at_min: float = 0.0


@dataclass(frozen=True)
class ControllerState:
    active_request: ControlRequest | None = None
    request_time_min: float = 0.0
    mode: Mode = Mode.IDLE
    last_command: DamperCommand = field(default_factory=DamperCommand)
    max_alpha_deg: float = 45.0
    tolerance_c: float = 0.2
    variant: ModelVariant = ModelVariant.PUBLISHED

    def __post_init__(self) -> None:
        if self.mode is Mode.TRACKING and self.active_request is None:
            raise ValueError("tracking mode requires an active request")
        if not self.tolerance_c > 0:
            raise ValueError(f"tolerance_c must be > 0, got {self.tolerance_c}")
        if not 0 < self.max_alpha_deg < 90:
            raise ValueError(f"max_alpha_deg must be in (0, 90), got {self.max_alpha_deg}")

    @property
    def deadline_at_min(self) -> float | None:
        if self.active_request is None:
            return None
        return self.request_time_min + self.active_request.deadline_min


def compute_angle(
    k_target: float,
    k_in: float,
    k_out: float,
    dt_remaining_min: float,
    duct_speed_m_per_min: float,
    constants: PhysicalConstants,
    volume_m3: float,
    *,
    variant: ModelVariant = ModelVariant.PUBLISHED,
    epsilon_capacity: float = EPSILON_CAPACITY_C,
) -> float:
    """Unclamped, signed damper angle in degrees.

    ``tan(alpha) = rho*V*(K_target - K_in) / (dt * v_out * L**2 * (K_out - K_in))``

    With ``variant=ModelVariant.DIMENSIONAL`` the density factor is dropped.

    Raises:
        DeadlinePassedError: ``dt_remaining_min <= 0``.
        NoCapacityError: duct and room temperatures coincide (or the duct is
            still) while an error remains.
        InfeasibleError: the duct air cannot drive the room toward the target.
    """
    if not dt_remaining_min > 0:
        raise DeadlinePassedError(f"no time remaining ({dt_remaining_min} min)")
    numerator = k_target - k_in
    if numerator == 0.0:
        return 0.0
    if not duct_speed_m_per_min > 0:
        raise NoCapacityError("no air is moving in the duct")
    denominator = k_out - k_in
    if abs(denominator) <= epsilon_capacity:
        raise NoCapacityError(f"duct air at {k_out} C cannot move a room at {k_in} C")
    if (numerator > 0) != (denominator > 0):
        raise InfeasibleError(f"duct air at {k_out} C drives the room away from {k_target} C")
    if (k_target - k_out) * (k_in - k_out) < 0:
        raise InfeasibleError(f"target {k_target} C lies beyond the duct temperature {k_out} C")

    density = constants.air_density if variant is ModelVariant.PUBLISHED else 1.0
    ratio = (density * volume_m3 * numerator) / (
        dt_remaining_min * duct_speed_m_per_min * constants.damper_area_m2 * denominator
    )
    return math.degrees(math.atan(ratio))


def clamp_command(alpha_unclamped_deg: float, max_alpha_deg: float, now_min: float) -> DamperCommand:
    if not 0 < max_alpha_deg < 90:
        raise ValueError(f"max_alpha_deg must be in (0, 90), got {max_alpha_deg}")
    alpha = min(max(alpha_unclamped_deg, 0.0), max_alpha_deg)
    return DamperCommand(alpha, alpha != alpha_unclamped_deg, now_min)


def submit_request(state: ControllerState, req: ControlRequest, now_min: float) -> ControllerState:
    """Start tracking ``req``; any earlier request is discarded."""
    return replace(state, active_request=req, request_time_min=now_min, mode=Mode.TRACKING)


class TickResult(NamedTuple):
    state: ControllerState
    command: DamperCommand
    flags: tuple[str, ...] = ()


def control_tick(
    state: ControllerState,
    room_reading: float,
    duct_reading: DuctAir,
    now_min: float,
    constants: PhysicalConstants,
    volume_m3: float,
) -> TickResult:
    """One controller period.

    Model errors never escape: an infeasible or no-capacity situation closes
    the damper and is reported through ``flags``.
    """
    mode = state.mode
    if mode is Mode.TRACKING and now_min >= state.deadline_at_min:
        mode = Mode.HOLDING

    if mode is Mode.IDLE:
        command = DamperCommand(0.0, False, now_min)
        return TickResult(replace(state, last_command=command), command)

    target = state.active_request.target_temperature_c
    flags: list[str] = []
    if mode is Mode.HOLDING:
        error = room_reading - target
        past_target = (target - duct_reading.temperature_c) * error <= 0
        if abs(error) <= state.tolerance_c and (past_target or state.last_command.alpha_deg == 0.0):
            command = DamperCommand(0.0, False, now_min)
            return TickResult(replace(state, mode=mode, last_command=command), command, ("deadband",))
        horizon = HOLD_HORIZON_MIN
    else:
        horizon = state.deadline_at_min - now_min

    try:
        alpha = compute_angle(
            target,
            room_reading,
            duct_reading.temperature_c,
            horizon,
            duct_reading.speed_m_per_min,
            constants,
            volume_m3,
            variant=state.variant,
        )
        command = clamp_command(alpha, state.max_alpha_deg, now_min)
        if command.saturated:
            flags.append("saturated")
    except NoCapacityError:
        command = DamperCommand(0.0, False, now_min)
        flags.append("no_capacity")
    except InfeasibleError:
        command = DamperCommand(0.0, False, now_min)
        flags.append("infeasible")
    return TickResult(replace(state, mode=mode, last_command=command), command, tuple(flags))
