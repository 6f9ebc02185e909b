"""Discrete-time room plant: well-mixed air volume fed through a damper.

Units are fixed across the package:

- temperature: degrees Celsius
- time: minutes
- flow: cubic meters per minute
- heat gains: watts
"""

from __future__ import annotations

import math
from dataclasses import dataclass


class DomainError(ValueError):
    """Raised when an input lies outside the physical model's domain."""


def _require_finite(**values: float) -> None:
    for name, value in values.items():
        if not math.isfinite(value):
            raise DomainError(f"{name} must be finite, got {value!r}")


@dataclass(frozen=True)
class RoomState:
    temperature_c: float
    volume_m3: float
    occupants: int = 0

    def __post_init__(self) -> None:
        _require_finite(temperature_c=self.temperature_c, volume_m3=self.volume_m3)
        if self.volume_m3 <= 0:
            raise DomainError(f"volume_m3 must be > 0, got {self.volume_m3}")
        if isinstance(self.occupants, bool) or not isinstance(self.occupants, int):
            raise DomainError(f"occupants must be an integer, got {self.occupants!r}")
        if self.occupants < 0:
            raise DomainError(f"occupants must be >= 0, got {self.occupants}")


@dataclass(frozen=True)
class DuctAir:
    temperature_c: float
    speed_m_per_min: float

    def __post_init__(self) -> None:
        _require_finite(temperature_c=self.temperature_c, speed_m_per_min=self.speed_m_per_min)
        if self.speed_m_per_min < 0:
            raise DomainError(f"speed_m_per_min must be >= 0, got {self.speed_m_per_min}")


@dataclass(frozen=True)
class PhysicalConstants:
    air_density: float = 1.225
    damper_side_m: float = 0.5
    heat_per_person_w: float = 100.0
    specific_heat_j_per_kg_k: float = 1005.0

    def __post_init__(self) -> None:
        for name in ("air_density", "damper_side_m", "heat_per_person_w", "specific_heat_j_per_kg_k"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise DomainError(f"{name} must be finite and > 0, got {value!r}")

    @property
    def damper_area_m2(self) -> float:
        return self.damper_side_m**2


@dataclass(frozen=True)
class AirflowSample:
    volumetric_flow_m3_per_min: float
    mixing_fraction: float

    @property
    def saturated(self) -> bool:
        """True when the inflow over the step would replace the whole room volume."""
        return self.mixing_fraction >= 1.0


def volumetric_flow(alpha_deg: float, duct: DuctAir, constants: PhysicalConstants) -> float:
    """Airflow through the damper at opening angle ``alpha_deg``.

    The open aperture is modeled as ``L**2 * tan(alpha)``, so the flow is
    ``v_out * L**2 * tan(alpha)``. A closed damper passes exactly zero.
    """
    _require_finite(alpha_deg=alpha_deg)
    if not 0.0 <= alpha_deg < 90.0:
        raise DomainError(f"alpha_deg must be in [0, 90), got {alpha_deg}")
    if alpha_deg == 0.0:
        return 0.0
    return duct.speed_m_per_min * constants.damper_area_m2 * math.tan(math.radians(alpha_deg))


def internal_gain_w(state: RoomState, constants: PhysicalConstants, misc_w: float = 0.0) -> float:
    if misc_w < 0:
        raise DomainError(f"misc_w must be >= 0, got {misc_w}")
    return state.occupants * constants.heat_per_person_w + misc_w


def airflow_sample(
    alpha_deg: float, duct: DuctAir, constants: PhysicalConstants, volume_m3: float, dt_min: float
) -> AirflowSample:
    q = volumetric_flow(alpha_deg, duct, constants)
    return AirflowSample(q, min(1.0, q * dt_min / volume_m3))


def step_room(
    state: RoomState,
    alpha_deg: float,
    duct: DuctAir,
    constants: PhysicalConstants,
    misc_w: float = 0.0,
    dt_min: float = 1.0,
) -> RoomState:
    """Advance the room by one plant step.

    A fraction ``f = min(1, q*dt/V)`` of the room air is replaced by duct air,
    then internal gains heat the (fixed) air mass. With no flow and no gains
    the temperature is returned unchanged, bit for bit.
    """
    _require_finite(alpha_deg=alpha_deg, misc_w=misc_w, dt_min=dt_min)
    if dt_min <= 0:
        raise DomainError(f"dt_min must be > 0, got {dt_min}")
    sample = airflow_sample(alpha_deg, duct, constants, state.volume_m3, dt_min)
    gains = internal_gain_w(state, constants, misc_w)

    temperature = state.temperature_c
    if sample.mixing_fraction > 0.0:
        temperature = temperature + sample.mixing_fraction * (duct.temperature_c - temperature)
    if gains > 0.0:
        heat_capacity_j_per_k = constants.air_density * state.volume_m3 * constants.specific_heat_j_per_kg_k
        temperature = temperature + gains * dt_min * 60.0 / heat_capacity_j_per_k
    _require_finite(temperature_c=temperature)
    return RoomState(temperature, state.volume_m3, state.occupants)
