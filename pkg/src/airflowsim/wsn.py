"""Simulated sensor network: star topology around a coordinator.

Nodes: one temperature sensor in the room, one in the duct, and the damper
actuator. Every hop goes through a :class:`NetLink` with latency, jitter and
loss. Event times are exact :class:`~fractions.Fraction` minutes so ordering
never depends on float rounding; ties break on ``(deliver_at, link_id, sequence)``.
"""

from __future__ import annotations

import heapq
import math
import zlib
from dataclasses import dataclass, field
from decimal import ROUND_HALF_UP, Decimal
from fractions import Fraction
from typing import Iterable, Union

import numpy as np

from airflowsim.controller import DamperCommand

ROOM_LINK = "room"
DUCT_LINK = "duct"
COMMAND_LINK = "command"
LINK_IDS = (ROOM_LINK, DUCT_LINK, COMMAND_LINK)

EVENT_LOG_COLUMNS = ("send_min", "deliver_min", "link_id", "kind", "dropped", "payload_summary")


@dataclass(frozen=True)
class SensorReading:
    node_id: str
    measured_c: float
    sampled_at_min: Fraction
    sequence: int


Payload = Union[SensorReading, DamperCommand]


@dataclass(frozen=True)
class NetLink:
    latency_min: float = 0.0
    jitter_min: float = 0.0
    loss_probability: float = 0.0

    def __post_init__(self) -> None:
        for name in ("latency_min", "jitter_min"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError(f"loss_probability must be in [0, 1], got {self.loss_probability!r}")

    @property
    def ideal(self) -> bool:
        return self.latency_min == 0 and self.jitter_min == 0 and self.loss_probability == 0


@dataclass(frozen=True)
class NoiseModel:
    std_dev_c: float = 0.0
    quantization_c: float = 0.0

    def __post_init__(self) -> None:
        for name in ("std_dev_c", "quantization_c"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {value!r}")


@dataclass(frozen=True, order=True)
class NetworkEvent:
    deliver_at_min: Fraction
    link_id: str
    sequence: int
    send_at_min: Fraction = field(compare=False)
    payload: Payload = field(compare=False)
    drop: bool = field(compare=False, default=False)

    @property
    def sort_key(self) -> tuple[Fraction, str, int]:
        return (self.deliver_at_min, self.link_id, self.sequence)


def stream(seed: int, name: str) -> np.random.Generator:
    """Independent generator for one named noise source.

    Streams are keyed by name, so turning on one source never shifts the
    draws seen by another.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(zlib.crc32(name.encode()),)))


def quantize(value: float, step: float) -> float:
    """Round to the nearest multiple of ``step``, ties away from zero."""
    if step == 0:
        return value
    step_dec = Decimal(repr(step))
    multiples = (Decimal(repr(value)) / step_dec).quantize(Decimal(1), rounding=ROUND_HALF_UP)
    return float(multiples * step_dec)


def sample(true_value_c: float, noise: NoiseModel, rng: np.random.Generator) -> float:
    value = true_value_c
    if noise.std_dev_c > 0:
        value = value + float(rng.normal(0.0, noise.std_dev_c))
    return quantize(value, noise.quantization_c)


def send(
    link: NetLink,
    payload: Payload,
    now_min: Fraction,
    rng: np.random.Generator,
    *,
    link_id: str,
    sequence: int,
) -> NetworkEvent:
    """Put ``payload`` on ``link``. One loss draw and one jitter draw per message."""
    drop = bool(rng.random() < link.loss_probability)
    jitter = float(rng.uniform(0.0, link.jitter_min)) if link.jitter_min > 0 else 0.0
    deliver_at = Fraction(now_min) + Fraction(link.latency_min) + Fraction(jitter)
    return NetworkEvent(deliver_at, link_id, sequence, Fraction(now_min), payload, drop)


def advance(queue: list[NetworkEvent], until_min: Fraction) -> list[NetworkEvent]:
    """Pop every deliverable event with ``deliver_at <= until_min``, in order.

    ``queue`` must be a heap (see :func:`heapq.heappush`). Dropped events are
    discarded without being returned.
    """
    delivered = []
    while queue and queue[0].deliver_at_min <= until_min:
        event = heapq.heappop(queue)
        if not event.drop:
            delivered.append(event)
    return delivered


def summarize_payload(payload: Payload) -> str:
    if isinstance(payload, SensorReading):
        return f"{payload.node_id}={payload.measured_c:.6g} seq={payload.sequence}"
    return f"alpha={payload.alpha_deg:.6g} sat={int(payload.saturated)} issued={payload.issued_at_min:.6g}"


class Network:
    """Links, RNG streams and the pending-event heap for one simulation run."""

    def __init__(
        self,
        links: dict[str, NetLink],
        noise: dict[str, NoiseModel],
        seed: int,
    ) -> None:
        missing = set(LINK_IDS) - set(links)
        if missing:
            raise ValueError(f"missing link configuration: {sorted(missing)}")
        self.links = links
        self.noise = {node: noise.get(node, NoiseModel()) for node in (ROOM_LINK, DUCT_LINK)}
        self._link_rng = {link_id: stream(seed, f"link:{link_id}") for link_id in LINK_IDS}
        self._sensor_rng = {node: stream(seed, f"sensor:{node}") for node in self.noise}
        self._sequence = {link_id: 0 for link_id in LINK_IDS}
        self._queue: list[NetworkEvent] = []
        self.log: list[NetworkEvent] = []

    def read_sensor(self, node: str, true_value_c: float, now_min: Fraction) -> NetworkEvent:
        measured = sample(true_value_c, self.noise[node], self._sensor_rng[node])
        reading = SensorReading(node, measured, now_min, self._sequence[node])
        return self.transmit(node, reading, now_min)

    def transmit(self, link_id: str, payload: Payload, now_min: Fraction) -> NetworkEvent:
        event = send(
            self.links[link_id],
            payload,
            now_min,
            self._link_rng[link_id],
            link_id=link_id,
            sequence=self._sequence[link_id],
        )
        self._sequence[link_id] += 1
        self.log.append(event)
        if not event.drop:
            heapq.heappush(self._queue, event)
        return event

    def deliver(self, until_min: Fraction, link_ids: Iterable[str] = LINK_IDS) -> list[NetworkEvent]:
        """Deliver due events for ``link_ids``; events on other links stay queued."""
        wanted = set(link_ids)
        due = advance(self._queue, until_min)
        keep = [event for event in due if event.link_id not in wanted]
        for event in keep:
            heapq.heappush(self._queue, event)
        return [event for event in due if event.link_id in wanted]

    @property
    def dropped_count(self) -> int:
        return sum(event.drop for event in self.log)

    def event_log_rows(self) -> list[tuple[str, ...]]:
        return [
            (
                f"{float(event.send_at_min):.6g}",
                f"{float(event.deliver_at_min):.6g}",
                event.link_id,
                "reading" if isinstance(event.payload, SensorReading) else "command",
                str(int(event.drop)),
                summarize_payload(event.payload),
            )
            for event in self.log
        ]
