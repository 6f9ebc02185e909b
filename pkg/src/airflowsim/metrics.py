"""Chilled-water plant efficiency analytics.

KFG is the energy (kWh) needed to cool 10,000 GPM of chilled water by 1 F
for one hour:

    KFG = power_kw * 1 h / ((flow_gpm / 10000) * delta_t_f)

ΔT is taken as return minus supply, positive for a working chiller loop.
NT is the AHU chilled-water set point minus the return temperature.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Sequence

import numpy as np

AHU_SETPOINT_F = 55.1
MIN_RELIABLE_DELTA_T_F = 0.1
PLANT_LOG_COLUMNS = ("timestamp", "power_kw", "flow_gpm", "supply_f", "return_f")
HOURLY_COLUMNS = ("hour", "mean_kfg", "count")
SURFACE_COLUMNS = ("nt_bin_lo", "nt_bin_hi", "dt_bin_lo", "dt_bin_hi", "mean_kfg", "count")
PROFILE_COLUMNS = ("dt_bin_lo", "dt_bin_hi", "mean_kfg", "count")


class UndefinedEfficiencyError(ValueError):
    """KFG has a zero ΔT denominator."""


class PlantLogError(ValueError):
    pass


@dataclass(frozen=True)
class PlantRecord:
    timestamp: datetime
    power_kw: float
    flow_gpm: float
    supply_f: float
    return_f: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.power_kw) and self.power_kw > 0):
            raise ValueError(f"power_kw must be > 0, got {self.power_kw}")
        if not (math.isfinite(self.flow_gpm) and self.flow_gpm > 0):
            raise ValueError(f"flow_gpm must be > 0, got {self.flow_gpm}")
        if not (math.isfinite(self.supply_f) and math.isfinite(self.return_f)):
            raise ValueError("supply_f and return_f must be finite")

    @property
    def reversed_loop(self) -> bool:
        """Return colder than supply: not a functioning chiller loop."""
        return self.return_f < self.supply_f


@dataclass(frozen=True)
class EfficiencyPoint:
    kfg: float
    delta_t_f: float
    nt_f: float
    hour_of_day: int
    flags: tuple[str, ...] = ()

    @property
    def reliable(self) -> bool:
        return not self.flags


def delta_t(rec: PlantRecord) -> float:
    return rec.return_f - rec.supply_f


def nt(rec: PlantRecord, setpoint_f: float = AHU_SETPOINT_F) -> float:
    return setpoint_f - rec.return_f


def kfg(rec: PlantRecord) -> float:
    """kWh per (10,000 GPM * F * hour). Negative when the loop is reversed."""
    dt = delta_t(rec)
    if dt == 0:
        raise UndefinedEfficiencyError(f"zero chilled-water delta T at {rec.timestamp.isoformat()}")
    return rec.power_kw * 1.0 / ((rec.flow_gpm / 10_000.0) * dt)


def efficiency_point(rec: PlantRecord, setpoint_f: float = AHU_SETPOINT_F) -> EfficiencyPoint:
    """KFG, ΔT and NT for one record, with reliability flags.

    Flags: ``negative_delta_t`` for a reversed loop, ``low_delta_t`` when
    |ΔT| is under 0.1 F and KFG blows up. Zero ΔT still raises.
    """
    dt = delta_t(rec)
    flags = []
    if dt < 0:
        flags.append("negative_delta_t")
    if abs(dt) < MIN_RELIABLE_DELTA_T_F:
        flags.append("low_delta_t")
    return EfficiencyPoint(kfg(rec), dt, nt(rec, setpoint_f), rec.timestamp.hour, tuple(flags))


def _reliable_points(records: Iterable[PlantRecord], setpoint_f: float) -> list[EfficiencyPoint]:
    points = []
    for rec in records:
        try:
            point = efficiency_point(rec, setpoint_f)
        except UndefinedEfficiencyError:
            continue
        if point.reliable:
            points.append(point)
    return points


@dataclass(frozen=True)
class HourlySeries:
    mean_kfg: tuple[float | None, ...]
    count: tuple[int, ...]


def hourly_kfg(records: Sequence[PlantRecord], setpoint_f: float = AHU_SETPOINT_F) -> HourlySeries:
    """Mean KFG per hour of day; hours without data are ``None``, not zero."""
    points = _reliable_points(records, setpoint_f)
    if not points:
        raise PlantLogError("no valid records to aggregate")
    sums = [0.0] * 24
    counts = [0] * 24
    for point in sorted(points, key=lambda p: (p.hour_of_day, p.kfg)):
        sums[point.hour_of_day] += point.kfg
        counts[point.hour_of_day] += 1
    means = tuple(sums[h] / counts[h] if counts[h] else None for h in range(24))
    return HourlySeries(means, tuple(counts))


def _check_edges(edges: Sequence[float], name: str) -> np.ndarray:
    arr = np.asarray(edges, dtype=float)
    if arr.ndim != 1 or arr.size < 2 or not np.all(np.diff(arr) > 0):
        raise ValueError(f"{name} edges must be at least two strictly increasing values")
    return arr


def _bin_index(value: float, edges: np.ndarray) -> int | None:
    # cells are right-closed (lo, hi]; the first cell also takes its lower edge
    if value < edges[0] or value > edges[-1]:
        return None
    if value == edges[0]:
        return 0
    return int(np.searchsorted(edges, value, side="left")) - 1


@dataclass(frozen=True)
class SurfaceCell:
    nt_lo: float
    nt_hi: float
    dt_lo: float
    dt_hi: float
    mean_kfg: float | None
    count: int


def kfg_surface(
    records: Sequence[PlantRecord],
    nt_bins: Sequence[float],
    dt_bins: Sequence[float],
    setpoint_f: float = AHU_SETPOINT_F,
) -> list[SurfaceCell]:
    """Mean KFG on an NT x ΔT grid.

    Cells are right-closed, ``(lo, hi]``, except the first cell on each axis
    which also includes its lower edge. Points outside the grid are ignored.
    """
    nt_edges = _check_edges(nt_bins, "nt")
    dt_edges = _check_edges(dt_bins, "dt")
    shape = (nt_edges.size - 1, dt_edges.size - 1)
    sums = np.zeros(shape)
    counts = np.zeros(shape, dtype=int)
    for point in sorted(_reliable_points(records, setpoint_f), key=lambda p: (p.nt_f, p.delta_t_f, p.kfg)):
        i = _bin_index(point.nt_f, nt_edges)
        j = _bin_index(point.delta_t_f, dt_edges)
        if i is None or j is None:
            continue
        sums[i, j] += point.kfg
        counts[i, j] += 1
    cells = []
    for i in range(shape[0]):
        for j in range(shape[1]):
            n = int(counts[i, j])
            cells.append(
                SurfaceCell(
                    float(nt_edges[i]),
                    float(nt_edges[i + 1]),
                    float(dt_edges[j]),
                    float(dt_edges[j + 1]),
                    float(sums[i, j] / n) if n else None,
                    n,
                )
            )
    return cells


def kfg_by_delta_t(
    records: Sequence[PlantRecord], dt_bins: Sequence[float], setpoint_f: float = AHU_SETPOINT_F
) -> list[SurfaceCell]:
    """Mean KFG per ΔT bin, all NT values pooled."""
    return kfg_surface(records, [-math.inf, math.inf], dt_bins, setpoint_f)


@dataclass(frozen=True)
class Reject:
    line: int
    reason: str


def parse_plant_log(text: str) -> tuple[list[PlantRecord], list[Reject]]:
    """Read a plant log CSV into records plus a rejects report.

    Raises:
        PlantLogError: the header is missing or lacks a required column.
    """
    reader = csv.reader(io.StringIO(text))
    try:
        header = [h.strip() for h in next(reader)]
    except StopIteration:
        raise PlantLogError("missing header row") from None
    missing = [col for col in PLANT_LOG_COLUMNS if col not in header]
    if missing:
        raise PlantLogError(f"header lacks columns: {', '.join(missing)}")
    index = {col: header.index(col) for col in PLANT_LOG_COLUMNS}

    records: list[PlantRecord] = []
    rejects: list[Reject] = []
    for row in reader:
        line = reader.line_num
        if not row or all(not cell.strip() for cell in row):
            continue
        try:
            if len(row) < len(header):
                raise ValueError(f"expected {len(header)} fields, got {len(row)}")
            fields = {col: row[i].strip() for col, i in index.items()}
            try:
                stamp = datetime.fromisoformat(fields["timestamp"])
            except ValueError:
                raise ValueError(f"bad timestamp {fields['timestamp']!r}") from None
            numbers = {}
            for col in PLANT_LOG_COLUMNS[1:]:
                try:
                    numbers[col] = float(fields[col])
                except ValueError:
                    raise ValueError(f"non-numeric {col} {fields[col]!r}") from None
            records.append(PlantRecord(stamp, **numbers))
        except ValueError as exc:
            rejects.append(Reject(line, str(exc)))
    return records, rejects


def _fmt(value: float | None) -> str:
    return "" if value is None else format(value, ".6g")


def _csv(header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    return buf.getvalue()


def hourly_csv(series: HourlySeries) -> str:
    return _csv(HOURLY_COLUMNS, ((h, _fmt(series.mean_kfg[h]), series.count[h]) for h in range(24)))


def surface_csv(cells: Sequence[SurfaceCell]) -> str:
    return _csv(
        SURFACE_COLUMNS,
        ((_fmt(c.nt_lo), _fmt(c.nt_hi), _fmt(c.dt_lo), _fmt(c.dt_hi), _fmt(c.mean_kfg), c.count) for c in cells),
    )


def profile_csv(cells: Sequence[SurfaceCell]) -> str:
    return _csv(PROFILE_COLUMNS, ((_fmt(c.dt_lo), _fmt(c.dt_hi), _fmt(c.mean_kfg), c.count) for c in cells))


def rejects_csv(rejects: Sequence[Reject]) -> str:
    return _csv(("line", "reason"), ((r.line, r.reason) for r in rejects))


def plant_log_csv(records: Sequence[PlantRecord]) -> str:
    return _csv(
        PLANT_LOG_COLUMNS,
        (
            (r.timestamp.isoformat(), _fmt(r.power_kw), _fmt(r.flow_gpm), _fmt(r.supply_f), _fmt(r.return_f))
            for r in records
        ),
    )


def generate_plant_log(
    n_records: int,
    seed: int = 0,
    *,
    start: datetime = datetime(2013, 6, 1),
    interval_hours: int = 2,
    kfg_at_zero_dt: float = 190.0,
    kfg_slope_per_f: float = -7.0,
    noise_fraction: float = 0.02,
) -> list[PlantRecord]:
    """Synthetic plant log with a planted KFG that falls linearly with ΔT.

    ΔT stays within [4, 16] F, so with the defaults the planted KFG spans
    78..162. A time-of-day load swing pushes ΔT up in the afternoon, which
    gives the hourly series some shape.
    """
    if kfg_at_zero_dt + kfg_slope_per_f * 16.0 <= 0:
        raise ValueError("planted KFG must stay positive over the ΔT range")
    rng = np.random.default_rng(seed)
    records = []
    for k in range(n_records):
        stamp = start + timedelta(hours=k * interval_hours)
        load = 0.5 + 0.5 * math.sin(math.pi * (stamp.hour - 8) / 12.0)
        dt = float(np.clip(rng.uniform(4.0, 14.0) + 2.0 * load, 4.0, 16.0))
        supply = float(rng.normal(42.0, 0.5))
        flow = float(rng.uniform(8_000.0, 24_000.0))
        planted = (kfg_at_zero_dt + kfg_slope_per_f * dt) * (1.0 + noise_fraction * float(rng.standard_normal()))
        power = planted * (flow / 10_000.0) * dt
        records.append(PlantRecord(stamp, round(power, 3), round(flow, 1), round(supply, 2), round(supply + dt, 2)))
    return records

