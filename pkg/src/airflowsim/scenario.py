"""Scenario files, occupancy generation and the closed-loop driver.

Each controller tick (one simulated minute) runs, in this fixed order:

1. occupancy events due at or before the tick are applied;
2. room and duct nodes sample and transmit;
3. due network events are delivered to the coordinator;
4. the controller ticks on the latest delivered readings;
5. the command is transmitted to the actuator;
6. the plant advances in ``dt_min`` sub-steps, the actuator picking up any
   command that has arrived by the start of each sub-step.
"""

from __future__ import annotations

import csv
import io
import json
import math
import re
import sys
from dataclasses import dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Any

import numpy as np

from airflowsim.controller import (
    ControlRequest,
    ControllerState,
    DamperCommand,
    Mode,
    ModelVariant,
    control_tick,
    submit_request,
)
from airflowsim.thermal import DuctAir, PhysicalConstants, RoomState, step_room, volumetric_flow
from airflowsim.wsn import (
    COMMAND_LINK,
    DUCT_LINK,
    EVENT_LOG_COLUMNS,
    LINK_IDS,
    ROOM_LINK,
    Network,
    NetLink,
    NoiseModel,
    stream,
)

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

AHU_SUPPLY_AIR_C = 12.8  # 55.1 F chilled-water set point, used as the supply-air default
CONTROLLER_PERIOD_MIN = 1

TRACE_COLUMNS = (
    "t_min",
    "true_temp_c",
    "sensed_temp_c",
    "alpha_deg",
    "saturated",
    "occupants",
    "flow_m3_per_min",
    "mode",
    "flags",
)


class ScenarioError(ValueError):
    """Invalid scenario document. ``key`` and ``line`` point at the culprit when known."""

    def __init__(self, message: str, key: str | None = None, line: int | None = None) -> None:
        where = ""
        if key is not None:
            where = f"[{key}]" if line is None else f"[{key}, line {line}]"
        super().__init__(f"{where} {message}".strip())
        self.key = key
        self.line = line


@dataclass(frozen=True)
class OccupancySpec:
    """Either an explicit ``(time_min, delta)`` list or a random birth-death process.

    In the random form arrivals occur at ``arrival_rate_per_hour`` while the room
    is below ``max_occupants``; each occupant leaves at ``departure_rate_per_hour``.
    """

    events: tuple[tuple[float, int], ...] | None = None
    arrival_rate_per_hour: float = 0.0
    departure_rate_per_hour: float = 0.0
    max_occupants: int = 0

    def __post_init__(self) -> None:
        if self.arrival_rate_per_hour < 0 or self.departure_rate_per_hour < 0:
            raise ValueError("occupancy rates must be >= 0")
        if self.max_occupants < 0:
            raise ValueError("max_occupants must be >= 0")

    @property
    def is_random(self) -> bool:
        return self.events is None


@dataclass(frozen=True)
class NetworkConfig:
    links: dict[str, NetLink] = field(default_factory=lambda: {link: NetLink() for link in LINK_IDS})
    noise: dict[str, NoiseModel] = field(default_factory=lambda: {ROOM_LINK: NoiseModel(), DUCT_LINK: NoiseModel()})
    # "wsn" routes everything through simulated links; "direct" wires controller to plant
    transport: str = "wsn"


@dataclass(frozen=True)
class Scenario:
    room: RoomState
    duct: DuctAir
    constants: PhysicalConstants
    request: ControlRequest
    occupancy: OccupancySpec = field(default_factory=lambda: OccupancySpec(events=()))
    network: NetworkConfig = field(default_factory=NetworkConfig)
    horizon_min: int = 30
    dt_min: Fraction = Fraction(1)
    seed: int = 0
    request_at_min: int = 0
    misc_gain_w: float = 0.0
    max_alpha_deg: float = 45.0
    tolerance_c: float = 0.2
    model: ModelVariant = ModelVariant.PUBLISHED

    def __post_init__(self) -> None:
        if self.horizon_min < self.request_at_min + self.request.deadline_min:
            raise ValueError("horizon_min must cover the request deadline")
        dt = Fraction(self.dt_min)
        if dt <= 0 or dt > CONTROLLER_PERIOD_MIN or (CONTROLLER_PERIOD_MIN / dt).denominator != 1:
            raise ValueError(f"dt_min must evenly divide the {CONTROLLER_PERIOD_MIN}-minute controller period")
        if not 0 <= self.seed < 2**64:
            raise ValueError("seed must be a 64-bit unsigned integer")
        if self.misc_gain_w < 0:
            raise ValueError("misc_gain_w must be >= 0")
        if self.network.transport not in ("wsn", "direct"):
            raise ValueError(f"unknown transport {self.network.transport!r}")
        if self.occupancy.events is not None:
            count = self.room.occupants
            for _, delta in sorted(self.occupancy.events, key=lambda ev: ev[0]):
                count += delta
                if count < 0:
                    raise ValueError("occupancy events drive the occupant count negative")


@dataclass(frozen=True)
class TraceRow:
    t_min: float
    true_temp_c: float
    sensed_temp_c: float
    alpha_deg: float
    saturated: bool
    occupants: int
    flow_m3_per_min: float
    mode: str
    flags: tuple[str, ...] = ()


@dataclass
class SimulationResult:
    scenario: Scenario
    trace: list[TraceRow]
    temp_at_deadline_c: float
    final_temp_c: float
    dropped_messages: int = 0
    event_log: list[tuple[str, ...]] = field(default_factory=list)

    @property
    def target_met(self) -> bool:
        target = self.scenario.request.target_temperature_c
        return abs(self.temp_at_deadline_c - target) <= self.scenario.tolerance_c

    @property
    def saturation_count(self) -> int:
        return sum(row.saturated for row in self.trace)

    def summary(self) -> dict[str, Any]:
        return {
            "target_met": self.target_met,
            "target_temp_c": self.scenario.request.target_temperature_c,
            "temp_at_deadline_c": self.temp_at_deadline_c,
            "final_temp_c": self.final_temp_c,
            "saturation_count": self.saturation_count,
            "dropped_messages": self.dropped_messages,
            "rows": len(self.trace),
        }


# -- scenario documents -------------------------------------------------------

_SCHEMA: dict[str, dict[str, tuple[type, Any]]] = {
    "room": {
        "volume_m3": (float, None),
        "initial_temp_c": (float, None),
        "initial_occupants": (int, 0),
        "misc_gain_w": (float, 0.0),
    },
    "duct": {
        "temperature_c": (float, AHU_SUPPLY_AIR_C),
        "speed_m_per_min": (float, None),
    },
    "constants": {
        "air_density": (float, 1.225),
        "damper_side_m": (float, 0.5),
        "heat_per_person_w": (float, 100.0),
        "specific_heat_j_per_kg_k": (float, 1005.0),
    },
    "request": {
        "target_temp_c": (float, None),
        "deadline_min": (float, None),
        "at_min": (int, 0),
    },
    "occupancy": {
        "events": (list, None),
        "arrival_rate_per_hour": (float, None),
        "departure_rate_per_hour": (float, None),
        "max_occupants": (int, None),
    },
    "network": {
        "transport": (str, "wsn"),
        "latency_min": (float, 0.0),
        "jitter_min": (float, 0.0),
        "loss_probability": (float, 0.0),
        **{f"{link}_{p}": (float, None) for link in LINK_IDS for p in ("latency_min", "jitter_min", "loss_probability")},
        **{f"{node}_{p}": (float, 0.0) for node in (ROOM_LINK, DUCT_LINK) for p in ("noise_std_c", "quantization_c")},
    },
    "sim": {
        "horizon_min": (int, None),
        "dt_min": (float, 1.0),
        "seed": (int, 0),
        "model": (str, ModelVariant.PUBLISHED.value),
        "max_alpha_deg": (float, 45.0),
        "tolerance_c": (float, 0.2),
    },
}

REQUIRED_KEYS = (
    "room.volume_m3",
    "room.initial_temp_c",
    "duct.speed_m_per_min",
    "request.target_temp_c",
    "request.deadline_min",
    "sim.horizon_min",
)


def _locate(text: str, section: str, key: str | None = None) -> int | None:
    """1-based line of ``key`` inside ``[section]`` (or of the header itself)."""
    current = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        header = re.match(r"^\[\s*([A-Za-z0-9_.-]+)\s*\]", line)
        if header:
            current = header.group(1)
            if key is None and current == section:
                return lineno
            continue
        if key is not None and current == section and re.match(rf"^{re.escape(key)}\s*=", line):
            return lineno
    return None


def _coerce(value: Any, kind: type, dotted: str, line: int | None) -> Any:
    if kind is float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise ScenarioError(f"expected a number, got {value!r}", dotted, line)
        return float(value)
    if kind is int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise ScenarioError(f"expected an integer, got {value!r}", dotted, line)
        return value
    if not isinstance(value, kind):
        raise ScenarioError(f"expected {kind.__name__}, got {value!r}", dotted, line)
    return value


def parse_scenario(text: str) -> Scenario:
    """Parse and validate a TOML scenario document.

    Unknown sections or keys are rejected; defaults fill everything optional.
    """
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ScenarioError(f"malformed document: {exc}") from exc

    missing = [k for k in REQUIRED_KEYS if k.split(".")[1] not in doc.get(k.split(".")[0], {})]
    if missing:
        raise ScenarioError(f"missing required keys: {', '.join(missing)}", missing[0])

    values: dict[str, dict[str, Any]] = {}
    for section, body in doc.items():
        if section not in _SCHEMA:
            raise ScenarioError("unknown section", section, _locate(text, section))
        if not isinstance(body, dict):
            raise ScenarioError("expected a section table", section, _locate(text, section))
        for key in body:
            if key not in _SCHEMA[section]:
                raise ScenarioError("unknown key", f"{section}.{key}", _locate(text, section, key))
    for section, keys in _SCHEMA.items():
        body = doc.get(section, {})
        values[section] = {}
        for key, (kind, default) in keys.items():
            if key in body:
                values[section][key] = _coerce(body[key], kind, f"{section}.{key}", _locate(text, section, key))
            else:
                values[section][key] = default

    def build(dotted: str, factory, *args, **kwargs):
        section, _, key = dotted.partition(".")
        try:
            return factory(*args, **kwargs)
        except (ValueError, TypeError) as exc:
            raise ScenarioError(str(exc), dotted, _locate(text, section, key or None)) from exc

    room, duct, const, req, occ, net, sim = (values[s] for s in _SCHEMA)

    room_state = build(
        "room", RoomState, room["initial_temp_c"], room["volume_m3"], room["initial_occupants"]
    )
    duct_air = build("duct", DuctAir, duct["temperature_c"], duct["speed_m_per_min"])
    constants = build("constants", PhysicalConstants, **const)
    request = build("request", ControlRequest, req["target_temp_c"], req["deadline_min"])

    if occ["events"] is not None:
        if any(occ[k] is not None for k in ("arrival_rate_per_hour", "departure_rate_per_hour", "max_occupants")):
            raise ScenarioError("give either events or random rates, not both", "occupancy", _locate(text, "occupancy"))
        events = []
        for item in occ["events"]:
            if (
                not isinstance(item, list)
                or len(item) != 2
                or isinstance(item[1], bool)
                or not isinstance(item[1], int)
                or not isinstance(item[0], (int, float))
            ):
                raise ScenarioError(
                    f"each event must be [time_min, delta_occupants], got {item!r}",
                    "occupancy.events",
                    _locate(text, "occupancy", "events"),
                )
            events.append((float(item[0]), item[1]))
        occupancy = OccupancySpec(events=tuple(events))
    elif any(occ[k] is not None for k in ("arrival_rate_per_hour", "departure_rate_per_hour", "max_occupants")):
        occupancy = build(
            "occupancy",
            OccupancySpec,
            None,
            occ["arrival_rate_per_hour"] or 0.0,
            occ["departure_rate_per_hour"] or 0.0,
            occ["max_occupants"] if occ["max_occupants"] is not None else 0,
        )
    else:
        occupancy = OccupancySpec(events=())

    links = {}
    for link in LINK_IDS:
        params = {p: net[f"{link}_{p}"] if net[f"{link}_{p}"] is not None else net[p]
                  for p in ("latency_min", "jitter_min", "loss_probability")}
        links[link] = build(f"network.{link}_loss_probability", NetLink, **params)
    noise = {
        node: build(
            f"network.{node}_noise_std_c", NoiseModel, net[f"{node}_noise_std_c"], net[f"{node}_quantization_c"]
        )
        for node in (ROOM_LINK, DUCT_LINK)
    }
    try:
        model = ModelVariant(sim["model"])
    except ValueError:
        raise ScenarioError(f"unknown model {sim['model']!r}", "sim.model", _locate(text, "sim", "model")) from None

    network = NetworkConfig(links, noise, net["transport"])
    return build(
        "sim",
        Scenario,
        room=room_state,
        duct=duct_air,
        constants=constants,
        request=request,
        occupancy=occupancy,
        network=network,
        horizon_min=sim["horizon_min"],
        dt_min=Fraction(str(sim["dt_min"])),
        seed=sim["seed"],
        request_at_min=req["at_min"],
        misc_gain_w=room["misc_gain_w"],
        max_alpha_deg=sim["max_alpha_deg"],
        tolerance_c=sim["tolerance_c"],
        model=model,
    )


def load_scenario(path: str | Path) -> Scenario:
    path = Path(path)
    return parse_scenario(path.read_text(encoding="utf-8"))


# -- occupancy ----------------------------------------------------------------

def generate_occupancy(
    spec: OccupancySpec, horizon_min: float, rng: np.random.Generator, initial: int = 0
) -> list[tuple[float, int]]:
    """Occupancy change events over ``[0, horizon_min)``.

    Explicit specs come back unchanged. Random specs are simulated exactly
    (Gillespie) as a birth-death chain capped at ``max_occupants``.
    """
    if not spec.is_random:
        return list(spec.events)
    events: list[tuple[float, int]] = []
    count = min(initial, spec.max_occupants) if spec.max_occupants else initial
    t = 0.0
    while True:
        arrival = spec.arrival_rate_per_hour / 60.0 if count < spec.max_occupants else 0.0
        departure = spec.departure_rate_per_hour / 60.0 * count
        total = arrival + departure
        if total <= 0:
            break
        t += float(rng.exponential(1.0 / total))
        if t >= horizon_min:
            break
        delta = 1 if rng.random() * total < arrival else -1
        count += delta
        events.append((t, delta))
    return events


# -- closed loop --------------------------------------------------------------

def run_scenario(s: Scenario) -> SimulationResult:
    """Run ``s`` to its horizon and return the per-minute trace."""
    direct = s.network.transport == "direct"
    network = None if direct else Network(s.network.links, s.network.noise, s.seed)

    pending = sorted(generate_occupancy(s.occupancy, s.horizon_min, stream(s.seed, "occupancy"), s.room.occupants),
                     key=lambda ev: ev[0])
    controller = ControllerState(max_alpha_deg=s.max_alpha_deg, tolerance_c=s.tolerance_c, variant=s.model)
    room = s.room
    actuator = DamperCommand(0.0, False, -math.inf)
    room_reading: float | None = None
    duct_reading: float | None = None
    deadline_at = s.request_at_min + s.request.deadline_min
    temp_at_deadline: float | None = None
    substeps = int(CONTROLLER_PERIOD_MIN / s.dt_min)
    dt = float(s.dt_min)
    trace: list[TraceRow] = []

    def actuate(until: Fraction) -> None:
        nonlocal actuator
        for event in network.deliver(until, (COMMAND_LINK,)):
            # a late command never overrides a newer one
            if event.payload.issued_at_min > actuator.issued_at_min:
                actuator = event.payload

    for tick in range(0, s.horizon_min, CONTROLLER_PERIOD_MIN):
        now = Fraction(tick)
        flags: list[str] = []

        occupants = room.occupants
        while pending and pending[0][0] <= tick:
            occupants = max(0, occupants + pending.pop(0)[1])
        room = replace(room, occupants=occupants)

        if tick == s.request_at_min:
            controller = submit_request(controller, s.request, float(now))

        if direct:
            room_reading, duct_reading = room.temperature_c, s.duct.temperature_c
        else:
            room_event = network.read_sensor(ROOM_LINK, room.temperature_c, now)
            network.read_sensor(DUCT_LINK, s.duct.temperature_c, now)
            if room_event.drop:
                flags.append("reading_dropped")
            fresh = False
            for event in network.deliver(now, (ROOM_LINK, DUCT_LINK)):
                if event.link_id == ROOM_LINK:
                    room_reading = event.payload.measured_c
                    fresh = event.payload.sampled_at_min == now
                else:
                    duct_reading = event.payload.measured_c
            if room_reading is not None and not fresh:
                flags.append("stale_reading")

        saturated = False
        if room_reading is None or duct_reading is None:
            flags.append("no_reading")
        else:
            controller, command, tick_flags = control_tick(
                controller,
                room_reading,
                DuctAir(duct_reading, s.duct.speed_m_per_min),
                float(now),
                s.constants,
                room.volume_m3,
            )
            flags.extend(tick_flags)
            saturated = command.saturated
            if direct:
                actuator = command
            elif network.transmit(COMMAND_LINK, command, now).drop:
                flags.append("command_dropped")

        if not direct:
            actuate(now)
        alpha_now = actuator.alpha_deg
        row = TraceRow(
            t_min=float(now),
            true_temp_c=room.temperature_c,
            sensed_temp_c=room_reading if room_reading is not None else math.nan,
            alpha_deg=alpha_now,
            saturated=saturated,
            occupants=room.occupants,
            flow_m3_per_min=volumetric_flow(alpha_now, s.duct, s.constants),
            mode=controller.mode.value,
            flags=tuple(flags),
        )
        trace.append(row)

        for k in range(substeps):
            sub_now = now + k * s.dt_min
            if k and not direct:
                actuate(sub_now)
            if temp_at_deadline is None and sub_now >= deadline_at:
                temp_at_deadline = room.temperature_c
            room = step_room(room, actuator.alpha_deg, s.duct, s.constants, s.misc_gain_w, dt)

    if temp_at_deadline is None:
        temp_at_deadline = room.temperature_c
    result = SimulationResult(
        scenario=s,
        trace=trace,
        temp_at_deadline_c=temp_at_deadline,
        final_temp_c=room.temperature_c,
        dropped_messages=0 if direct else network.dropped_count,
        event_log=[] if direct else network.event_log_rows(),
    )
    if trace:
        last = trace[-1]
        trace[-1] = replace(last, flags=last.flags + ("target_met" if result.target_met else "target_missed",))
    return result


# -- output -------------------------------------------------------------------

def _fmt(value: float) -> str:
    if isinstance(value, float) and math.isnan(value):
        return ""
    return format(value, ".6g")


def trace_csv(trace: list[TraceRow]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(TRACE_COLUMNS)
    for row in trace:
        writer.writerow(
            (
                _fmt(row.t_min),
                _fmt(row.true_temp_c),
                _fmt(row.sensed_temp_c),
                _fmt(row.alpha_deg),
                int(row.saturated),
                row.occupants,
                _fmt(row.flow_m3_per_min),
                row.mode,
                "|".join(row.flags),
            )
        )
    return buf.getvalue()


def event_log_csv(rows: list[tuple[str, ...]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(EVENT_LOG_COLUMNS)
    writer.writerows(rows)
    return buf.getvalue()


def summary_json(result: SimulationResult) -> str:
    summary = {k: (float(_fmt(v)) if isinstance(v, float) else v) for k, v in result.summary().items()}
    return json.dumps(summary, indent=2, sort_keys=True) + "\n"


def write_outputs(result: SimulationResult, output_dir: str | Path, *, event_log: bool = False) -> list[Path]:
    output_dir = Path(output_dir)
    output_dir.mkdir(parents=True, exist_ok=True)
    written = [output_dir / "trace.csv", output_dir / "summary.json"]
    written[0].write_text(trace_csv(result.trace), encoding="utf-8")
    written[1].write_text(summary_json(result), encoding="utf-8")
    if event_log:
        path = output_dir / "events.csv"
        path.write_text(event_log_csv(result.event_log), encoding="utf-8")
        written.append(path)
    return written
