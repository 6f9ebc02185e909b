"""Room airflow control over a simulated wireless sensor network, plus
chilled-water plant efficiency analytics."""

from airflowsim.controller import (
    ControlRequest,
    ControllerState,
    DamperCommand,
    Mode,
    ModelVariant,
    clamp_command,
    compute_angle,
    control_tick,
    submit_request,
)
from airflowsim.scenario import Scenario, load_scenario, parse_scenario, run_scenario
from airflowsim.thermal import DuctAir, PhysicalConstants, RoomState, step_room, volumetric_flow

__version__ = "0.1.0"

__all__ = [
    "ControlRequest",
    "ControllerState",
    "DamperCommand",
    "DuctAir",
    "Mode",
    "ModelVariant",
    "PhysicalConstants",
    "RoomState",
    "Scenario",
    "clamp_command",
    "compute_angle",
    "control_tick",
    "load_scenario",
    "parse_scenario",
    "run_scenario",
    "step_room",
    "submit_request",
    "volumetric_flow",
]
