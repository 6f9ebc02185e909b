import random
from datetime import datetime

import pytest
from hypothesis import given
from hypothesis import strategies as st

from airflowsim.data import sample_log_path
from airflowsim.metrics import (
    HOURLY_COLUMNS,
    PlantLogError,
    PlantRecord,
    UndefinedEfficiencyError,
    delta_t,
    efficiency_point,
    generate_plant_log,
    hourly_csv,
    hourly_kfg,
    kfg,
    kfg_by_delta_t,
    kfg_surface,
    nt,
    parse_plant_log,
    plant_log_csv,
    surface_csv,
)

NOON = datetime(2013, 6, 1, 14, 0)


def rec(power=2000.0, flow=20000.0, supply=45.0, ret=55.0, when=NOON):
    return PlantRecord(when, power, flow, supply, ret)


def test_kfg_hand_value():
    # 2000 / ((20000 / 10000) * 10)
    assert kfg(rec()) == 100.0


def test_kfg_zero_delta_t_raises():
    with pytest.raises(UndefinedEfficiencyError):
        kfg(rec(ret=45.0))


def test_negative_delta_t_is_flagged_not_rejected():
    point = efficiency_point(rec(supply=55.0, ret=45.0))
    assert point.kfg < 0
    assert "negative_delta_t" in point.flags and not point.reliable


def test_small_delta_t_unreliable():
    assert "low_delta_t" in efficiency_point(rec(ret=45.05)).flags


@given(st.floats(min_value=1e-3, max_value=1e3))
def test_kfg_scale_invariance(k):
    assert kfg(rec(power=2000.0 * k, flow=20000.0 * k)) == pytest.approx(100.0, rel=1e-12)


@given(st.floats(min_value=0.2, max_value=30.0), st.floats(min_value=0.01, max_value=10.0))
def test_kfg_strictly_decreasing_in_delta_t(dt, extra):
    assert kfg(rec(ret=45.0 + dt + extra)) < kfg(rec(ret=45.0 + dt))


def test_delta_t():
    assert delta_t(rec()) == 10.0
    assert delta_t(rec(ret=45.0)) == 0.0
    assert delta_t(rec(supply=55.0, ret=45.0)) == -delta_t(rec())


@pytest.mark.parametrize("ret, expected", [(55.1, 0.0), (65.0, -9.9), (50.1, 5.0)])
def test_nt(ret, expected):
    assert nt(rec(ret=ret)) == pytest.approx(expected, abs=1e-12)


@given(st.floats(40, 50), st.floats(0.5, 20), st.floats(50, 60))
def test_nt_identity(supply, dt, setpoint):
    r = rec(supply=supply, ret=supply + dt)
    assert nt(r, setpoint) == pytest.approx(setpoint - supply - delta_t(r), abs=1e-9)


def test_hourly_single_record():
    series = hourly_kfg([rec()])
    assert series.mean_kfg[14] == 100.0
    assert all(series.mean_kfg[h] is None for h in range(24) if h != 14)


def test_hourly_mean_and_two_slots():
    series = hourly_kfg([rec(), rec(power=4000.0), rec(when=NOON.replace(hour=3))])
    assert series.mean_kfg[14] == 150.0 and series.count[14] == 2
    assert series.mean_kfg[3] == 100.0
    assert sum(v is not None for v in series.mean_kfg) == 2


def test_hourly_requires_valid_records():
    with pytest.raises(PlantLogError):
        hourly_kfg([rec(ret=45.0)])


def test_surface_one_record():
    cells = kfg_surface([rec()], [-10, 0, 10], [0, 5, 10, 15])
    populated = [c for c in cells if c.count]
    assert len(cells) == 6 and len(populated) == 1
    # NT = 0.1 -> (0, 10]; dT = 10 sits on an edge -> right-closed (5, 10]
    cell = populated[0]
    assert (cell.nt_lo, cell.dt_lo, cell.dt_hi, cell.mean_kfg) == (0, 5, 10, 100.0)


def test_surface_first_bin_takes_lower_edge():
    cells = kfg_surface([rec(ret=50.0)], [-10, 10], [5, 10])
    assert cells[0].count == 1


def test_surface_empty_input():
    cells = kfg_surface([], [0, 1], [0, 1, 2])
    assert all(c.mean_kfg is None and c.count == 0 for c in cells)


def test_surface_rejects_bad_edges():
    with pytest.raises(ValueError):
        kfg_surface([rec()], [0, 0], [0, 1])


def test_aggregations_permutation_invariant():
    records = generate_plant_log(300, seed=5)
    shuffled = records[:]
    random.Random(1).shuffle(shuffled)
    assert hourly_kfg(records) == hourly_kfg(shuffled)
    edges_nt, edges_dt = [-6, -2, 2, 6, 10], [4, 8, 12, 16]
    assert kfg_surface(records, edges_nt, edges_dt) == kfg_surface(shuffled, edges_nt, edges_dt)


def test_parse_sample_log_round_trip():
    text = sample_log_path().read_text()
    records, rejects = parse_plant_log(text)
    assert len(records) == 1440 and rejects == []
    assert plant_log_csv(records) == text


def test_parse_collects_rejects_with_line_numbers():
    text = (
        "timestamp,power_kw,flow_gpm,supply_f,return_f\n"
        "2013-06-01T00:00:00,1000,10000,44,54\n"
        "2013-06-01T02:00:00,lots,10000,44,54\n"
        "not-a-date,1000,10000,44,54\n"
        "2013-06-01T04:00:00,1000,10000\n"
        "2013-06-01T06:00:00,-5,10000,44,54\n"
    )
    records, rejects = parse_plant_log(text)
    assert len(records) == 1
    assert [r.line for r in rejects] == [3, 4, 5, 6]
    assert "power_kw" in rejects[0].reason


def test_parse_header_only():
    assert parse_plant_log("timestamp,power_kw,flow_gpm,supply_f,return_f\n") == ([], [])


@pytest.mark.parametrize("text", ["", "a,b,c\n1,2,3\n"])
def test_parse_missing_header(text):
    with pytest.raises(PlantLogError):
        parse_plant_log(text)


def test_generator_plants_decreasing_profile():
    profile = kfg_by_delta_t(generate_plant_log(1440, seed=0), [4, 6, 8, 10, 12, 14, 16])
    means = [c.mean_kfg for c in profile]
    assert all(b < a for a, b in zip(means, means[1:]))


def test_csv_outputs():
    series = hourly_kfg([rec()])
    lines = hourly_csv(series).splitlines()
    assert lines[0] == ",".join(HOURLY_COLUMNS) and len(lines) == 25
    assert lines[15] == "14,100,1" and lines[1] == "0,,0"
    surface = surface_csv(kfg_surface([rec()], [-10, 0, 10], [0, 5, 10, 15])).splitlines()
    assert surface[0] == "nt_bin_lo,nt_bin_hi,dt_bin_lo,dt_bin_hi,mean_kfg,count"
    assert "0,10,5,10,100,1" in surface
