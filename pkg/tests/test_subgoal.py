import math

import numpy as np
import pytest

from subgoal_sfm.params import ModelParams
from subgoal_sfm.states import (ObstacleShape, PedestrianState, Surroundings,
                                VehicleState)
from subgoal_sfm.subgoal import temporary_destination

from oracles import oracle_temporary_destination


def ped(px, py, vx=0.0, vy=0.0):
    return PedestrianState(position=np.array([px, py]), velocity=np.array([vx, vy]))


RADIUS = 0.25
PARAMS = ModelParams()


def test_empty_scene_heads_straight_for_goal():
    ego = ped(0.0, 0.0, 1.0, 0.0)
    dest = np.array([10.0, 0.0])
    wp = temporary_destination(ego, Surroundings(), dest, PARAMS, RADIUS)
    assert wp.direction == pytest.approx(0.0, abs=1e-12)
    assert wp.distance == PARAMS.nav_range
    assert np.allclose(wp.point, [PARAMS.nav_range, 0.0])


def test_goal_coincides_with_ego():
    ego = ped(2.0, 3.0)
    wp = temporary_destination(ego, Surroundings(), np.array([2.0, 3.0]), PARAMS, RADIUS)
    assert wp.distance == 0.0
    assert np.allclose(wp.point, [2.0, 3.0])


def test_blocker_on_goal_line_deflects_to_nearest_clear_direction():
    ego = ped(0.0, 0.0, 1.0, 0.0)
    dest = np.array([10.0, 0.0])
    blocker = ped(1.5, 0.0)
    sur = Surroundings(pedestrians=[blocker])
    wp = temporary_destination(ego, sur, dest, PARAMS, RADIUS)
    assert wp.direction != pytest.approx(0.0)
    # matches the literal enumeration of all candidates
    direction, distance = oracle_temporary_destination(ego, sur, dest, PARAMS, RADIUS)
    assert wp.direction == direction
    assert wp.distance == distance
    assert wp.distance == PARAMS.nav_range


def test_fully_blocked_fan_picks_edge_near_velocity():
    # a wide wall of the vehicle's front zone covers the whole fan
    ego = ped(0.0, 0.0, math.cos(2.0), math.sin(2.0))
    dest = np.array([10.0, 0.0])
    veh = VehicleState(position=np.array([4.0, 0.0]), heading=math.pi, speed=0.0,
                       center_to_front=2.0, center_to_rear=2.0, half_width=60.0)
    sur = Surroundings(vehicles=[veh])
    params = ModelParams(nav_directions=8, nav_angle_step=0.05)
    wp = temporary_destination(ego, sur, dest, params, RADIUS)
    # velocity angle 2.0 rad is closer to the upper fan edge (+4 * 0.05 rad)
    assert wp.direction == pytest.approx(4 * 0.05)
    direction, distance = oracle_temporary_destination(ego, sur, dest, params, RADIUS)
    assert wp.direction == direction and wp.distance == distance


def test_blocked_direction_range_is_hit_minus_radius():
    ego = ped(0.0, 0.0, 1.0, 0.0)
    dest = np.array([10.0, 0.0])
    params = ModelParams(nav_directions=2, nav_angle_step=1e-4)
    blocker = ped(2.0, 0.0)     # capsule hit at 2.0 - 0.5 = 1.5 on the center ray
    sur = Surroundings(pedestrians=[blocker])
    wp = temporary_destination(ego, sur, dest, params, RADIUS)
    assert wp.distance == pytest.approx(1.5 - RADIUS, abs=1e-3)


def test_swept_occupancy_blocks_ahead_of_moving_pedestrian():
    ego = ped(0.0, 0.0, 1.0, 0.0)
    dest = np.array([10.0, 0.0])
    # walker currently off the line, but its predicted sweep crosses it
    mover = ped(2.0, -1.5, 0.0, 1.5 / PARAMS.ped_predict_horizon)
    wp = temporary_destination(ego, Surroundings(pedestrians=[mover]), dest,
                               PARAMS, RADIUS)
    assert wp.direction != pytest.approx(0.0)


def test_matches_oracle_on_random_scenes():
    rng = np.random.default_rng(42)
    mismatches = run_oracle_comparison(rng, scenes=300)
    assert mismatches == []


def run_oracle_comparison(rng, scenes):
    """Shared by the unit test (300 scenes) and the acceptance run (1000)."""
    mismatches = []
    for case in range(scenes):
        params = ModelParams(
            nav_directions=int(rng.integers(2, 21)) * 2,
            nav_angle_step=float(rng.uniform(0.02, 0.12)),
            nav_range=float(rng.uniform(1.5, 5.0)),
            veh_lookahead_time=float(rng.uniform(2.0, 4.0)),
            ped_predict_horizon=float(rng.uniform(0.5, 1.5)),
        )
        radius = float(rng.uniform(0.15, 0.4))
        ego = ped(*rng.uniform(-2, 2, 2), *rng.normal(0, 1, 2))
        dest = ego.position + rng.uniform(-6, 6, 2)
        if np.hypot(*(dest - ego.position)) < 0.3:
            dest = ego.position + np.array([3.0, 0.0])

        n_ped = int(rng.integers(0, 4))
        n_veh = int(rng.integers(0, 3))
        n_obs = int(rng.integers(0, 2))
        peds = [ped(*(ego.position + rng.uniform(-4, 4, 2)), *rng.normal(0, 1.2, 2))
                for _ in range(n_ped)]
        vehicles = [VehicleState(position=ego.position + rng.uniform(-6, 6, 2),
                                 heading=float(rng.uniform(-math.pi, math.pi)),
                                 speed=float(rng.uniform(0, 3)),
                                 center_to_front=float(rng.uniform(1.0, 2.5)),
                                 center_to_rear=float(rng.uniform(1.0, 2.5)),
                                 half_width=float(rng.uniform(0.6, 1.2)))
                    for _ in range(n_veh)]
        obstacles = []
        for _ in range(n_obs):
            a = ego.position + rng.uniform(-4, 4, 2)
            b = a + rng.uniform(-3, 3, 2)
            if np.hypot(*(b - a)) > 1e-3:
                obstacles.append(ObstacleShape(np.stack([a, b])))
        sur = Surroundings(pedestrians=peds, vehicles=vehicles, obstacles=obstacles)

        wp = temporary_destination(ego, sur, dest, params, radius)
        direction, distance = oracle_temporary_destination(ego, sur, dest, params, radius)
        if wp.direction != direction or wp.distance != distance:
            mismatches.append((case, wp.direction, direction, wp.distance, distance))
    return mismatches
