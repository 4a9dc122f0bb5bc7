import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from laserweed.world import (CropRow, Obstacle, RobotState, ScenarioError, ScenarioSpec, Weed,
                             advance, count_eliminated, generate_scenario, load_scenario_spec,
                             nearest, normalize_angle, scenario_to_csv, weeds_in_bounds)


def test_same_seed_same_field():
    a = generate_scenario(ScenarioSpec(row_length_m=3.0), 7)
    b = generate_scenario(ScenarioSpec(row_length_m=3.0), 7)
    assert scenario_to_csv(a) == scenario_to_csv(b)
    c = generate_scenario(ScenarioSpec(row_length_m=3.0), 8)
    assert scenario_to_csv(a) != scenario_to_csv(c)


def test_default_field_has_193_weeds():
    spec = ScenarioSpec()
    assert spec.weed_count == 193
    world = generate_scenario(spec, 0)
    assert len(world.weeds) == 193
    assert weeds_in_bounds(world)


def test_zero_density_gives_no_weeds():
    world = generate_scenario(ScenarioSpec(weed_density_per_m2=0.0), 3)
    assert world.weeds == []
    assert len(world.crop_positions()) == 2 * 41


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_placement_invariants(seed):
    spec = ScenarioSpec(row_length_m=4.0)
    world = generate_scenario(spec, seed)
    crops = world.crop_positions()
    xy = world.weed_positions()
    r = np.array([w.stem_radius_m for w in world.weeds])
    d_crop = np.hypot(xy[:, None, 0] - crops[None, :, 0], xy[:, None, 1] - crops[None, :, 1])
    assert d_crop.min() >= spec.crop_min_separation_m
    gaps = np.hypot(xy[:, None, 0] - xy[None, :, 0], xy[:, None, 1] - xy[None, :, 1]) - r[:, None] - r[None, :]
    np.fill_diagonal(gaps, np.inf)
    assert gaps.min() >= spec.weed_min_gap_m
    assert ((r >= spec.weed_radius_min_m) & (r <= spec.weed_radius_max_m)).all()
    rows_y = np.array([row.start[1] for row in world.rows])
    assert (np.abs(xy[:, 1, None] - rows_y[None, :]).min(axis=1) <= spec.weed_band_m / 2).all()


def test_bad_specs_are_rejected():
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec(row_count=0), 0)
    with pytest.raises(ScenarioError):
        generate_scenario(ScenarioSpec(weed_band_m=0.6), 0)
    with pytest.raises(ScenarioError):
        CropRow(start=(0, 0), direction=(1.0, 1.0), plant_spacing_m=0.25, plant_radius_m=0.04, length_m=1)
    with pytest.raises(ScenarioError):
        Weed(position=(0, 0), stem_radius_m=0.001, height_m=0.1)
    with pytest.raises(ScenarioError):
        load_scenario_spec({"rows": 3})


def test_load_scenario_spec_obstacles():
    spec = load_scenario_spec({"row_count": 1, "obstacles": [
        {"x": 2.0, "y": 0.3, "height_cm": 12, "kind": "rock"}]})
    world = generate_scenario(spec, 0)
    assert world.obstacles == [Obstacle(position=(2.0, 0.3), height_cm=12.0, kind="rock")]


def test_csv_lists_every_entity():
    world = generate_scenario(ScenarioSpec(row_length_m=1.0), 0)
    lines = scenario_to_csv(world).splitlines()
    assert lines[0] == "entity,x,y,attributes"
    assert len(lines) == 1 + len(world.crop_positions()) + len(world.weeds)


def test_small_helpers():
    assert nearest([], (0, 0)) == (-1, math.inf)
    i, d = nearest([(0, 0), (3, 4)], (3, 3))
    assert i == 1 and d == pytest.approx(1.0)
    weeds = [Weed((0, 0), 0.005, 0.1), Weed((1, 0), 0.005, 0.1, eliminated=True)]
    assert count_eliminated(weeds) == 1


@given(st.floats(-50, 50, allow_nan=False))
def test_normalize_angle_range(theta):
    w = normalize_angle(theta)
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(theta), abs_tol=1e-9)
    assert math.isclose(math.sin(w), math.sin(theta), abs_tol=1e-9)


def test_straight_drive():
    s = advance(RobotState(heading_rad=math.pi / 2), (50.0, 50.0), 2.0)
    assert s.position == pytest.approx((0.0, 1.0))
    assert s.odometer_m == pytest.approx(1.0)
    assert s.clock_s == 2.0


def test_point_turn_stays_in_place():
    track = 0.406
    speed = math.radians(90) * track / 2 * 100  # quarter turn in one second
    s = advance(RobotState(position=(1.0, 2.0)), (-speed, speed), 1.0, max_speed_cm_s=math.inf)
    assert s.position == pytest.approx((1.0, 2.0), abs=1e-12)
    assert s.heading_rad == pytest.approx(math.pi / 2)
    assert s.odometer_m == 0.0


def _midpoint(state, speeds, dt, n=20000, track=0.406):
    x, y = state.position
    th = state.heading_rad
    vl, vr = (v / 100.0 for v in speeds)
    v, w = (vl + vr) / 2, (vr - vl) / track
    h = dt / n
    for _ in range(n):
        x += v * h * math.cos(th + w * h / 2)
        y += v * h * math.sin(th + w * h / 2)
        th += w * h
    return x, y, th


@given(st.floats(-60, 60), st.floats(-60, 60), st.floats(0.05, 3.0), st.floats(-3.1, 3.1))
def test_arc_matches_fine_integration(vl, vr, dt, heading):
    start = RobotState(position=(0.3, -0.2), heading_rad=heading)
    s = advance(start, (vl, vr), dt)
    x, y, th = _midpoint(start, (vl, vr), dt, n=2000)
    assert s.position == pytest.approx((x, y), abs=1e-6)
    assert math.isclose(math.cos(s.heading_rad), math.cos(th), abs_tol=1e-9)
    assert math.isclose(math.sin(s.heading_rad), math.sin(th), abs_tol=1e-9)


def test_speed_saturation_and_bad_dt():
    s = advance(RobotState(), (500.0, 500.0), 1.0)
    assert s.position[0] == pytest.approx(1.0)
    with pytest.raises(ValueError):
        advance(RobotState(), (10.0, 10.0), 0.0)
