import math

import numpy as np
import pytest

from subgoal_sfm.forces import (integrate_step, limit_total_force,
                                navigational_force, obstacle_repulsive_force,
                                pedestrian_repulsive_force,
                                vehicle_repulsive_force)
from subgoal_sfm.geometry import rot_matrix
from subgoal_sfm.params import ModelParams, PedestrianProfile
from subgoal_sfm.states import (ObstacleShape, PedestrianState,
                                TemporaryDestination, VehicleState)

from oracles import brute_force_closest_on_shape


def ped(px, py, vx=0.0, vy=0.0):
    return PedestrianState(position=np.array([px, py]), velocity=np.array([vx, vy]))


def vehicle(x=0.0, y=0.0, heading=0.0, speed=0.0, front=2.0, rear=2.0, half_w=0.9):
    return VehicleState(position=np.array([x, y]), heading=heading, speed=speed,
                        center_to_front=front, center_to_rear=rear, half_width=half_w)


def profile(dest=(10.0, 0.0), **kw):
    return PedestrianProfile(destination=np.array(dest), **kw)


PARAMS = ModelParams()


class TestVehicleForce:
    def test_zero_beyond_front_buffer(self):
        veh = vehicle(speed=1.0)
        front = veh.front_reach(PARAMS.veh_lookahead_time)
        ego = ped(front + PARAMS.veh_front_buffer + 1.0, 0.5)
        assert np.allclose(vehicle_repulsive_force(ego, veh, PARAMS), 0.0)

    def test_full_magnitude_alongside_body(self):
        # inside the body's lateral band: d_lat = 0, m_lon = 1
        veh = vehicle()
        ego = ped(0.0, 0.5)
        force = vehicle_repulsive_force(ego, veh, PARAMS)
        assert force[0] == pytest.approx(0.0, abs=1e-12)
        assert force[1] == pytest.approx(PARAMS.veh_repulsion_strength)

    def test_lateral_decay_value(self):
        # frozen oracle: beta = 3.60 (a reported calibrated value), d_lat = 0.5
        params = ModelParams(veh_decay_rate=3.60)
        veh = vehicle()
        ego = ped(0.0, veh.half_width + 0.5)
        force = vehicle_repulsive_force(ego, veh, params)
        expected = params.veh_repulsion_strength * math.exp(-3.60 * 0.5)
        assert np.hypot(*force) == pytest.approx(expected, rel=1e-12)
        assert expected / params.veh_repulsion_strength == pytest.approx(0.1653, abs=5e-5)

    def test_lower_half_pushes_negative_y(self):
        force = vehicle_repulsive_force(ped(0.0, -0.3), vehicle(), PARAMS)
        assert force[1] < 0

    def test_centerline_tie_breaks_to_plus_y(self):
        force = vehicle_repulsive_force(ped(0.0, 0.0), vehicle(), PARAMS)
        assert force[1] > 0

    def test_direction_is_lateral_in_vehicle_frame(self):
        heading = 0.7
        veh = vehicle(x=3.0, y=-2.0, heading=heading, speed=1.5)
        ego_local = np.array([1.0, 1.4])
        ego_world = veh.position + rot_matrix(heading) @ ego_local
        force = vehicle_repulsive_force(ped(*ego_world), veh, PARAMS)
        lateral_world = rot_matrix(heading) @ np.array([0.0, 1.0])
        cross = force[0] * lateral_world[1] - force[1] * lateral_world[0]
        assert cross == pytest.approx(0.0, abs=1e-9)
        assert force @ lateral_world > 0

    def test_front_window_uses_speed_scaled_reach(self):
        veh = vehicle(speed=2.0)
        front = veh.front_reach(PARAMS.veh_lookahead_time)
        inside = vehicle_repulsive_force(ped(front - 0.01, 0.2), veh, PARAMS)
        ramp = vehicle_repulsive_force(
            ped(front + PARAMS.veh_front_buffer / 2.0, 0.2), veh, PARAMS)
        assert np.hypot(*ramp) == pytest.approx(0.5 * np.hypot(*inside), rel=1e-9)

    def test_monotone_decay_with_lateral_distance(self):
        veh = vehicle()
        mags = [np.hypot(*vehicle_repulsive_force(ped(0.0, y), veh, PARAMS))
                for y in np.linspace(veh.half_width, veh.half_width + 4.0, 40)]
        assert all(a > b for a, b in zip(mags, mags[1:]))

    def test_m_lon_continuity_and_range(self):
        # m_lon recovered as |F| / m_lat on the centerline band
        params = ModelParams()
        veh = vehicle(speed=1.7)
        front = veh.front_reach(params.veh_lookahead_time)
        m_lat = params.veh_repulsion_strength  # d_lat = 0 at y = 0.2

        def m_lon(x):
            return np.hypot(*vehicle_repulsive_force(ped(x, 0.2), veh, params)) / m_lat

        xs = np.linspace(-veh.center_to_rear + 1e-6, front + params.veh_front_buffer + 1.0, 400)
        vals = np.array([m_lon(x) for x in xs])
        assert np.all((vals >= 0.0) & (vals <= 1.0))
        # boundary agreement between adjacent pieces
        for x_edge in (front, front + params.veh_front_buffer):
            below = m_lon(x_edge - 1e-12)
            above = m_lon(x_edge + 1e-12)
            assert abs(below - above) <= 1e-9
        # piecewise shape: flat 1 inside, linear ramp, 0 outside
        assert m_lon(0.0) == pytest.approx(1.0)
        assert m_lon(front + 0.5 * params.veh_front_buffer) == pytest.approx(0.5, abs=1e-9)
        assert m_lon(front + params.veh_front_buffer + 0.3) == 0.0


class TestPedestrianForce:
    def test_anisotropy_floor_behind(self):
        ego = ped(0.0, 0.0, 1.0, 0.0)
        other = ped(-1.0, 0.0)   # directly behind the walking direction
        force = pedestrian_repulsive_force(ego, other, PARAMS, 0.25)
        gap = 1.0 - 2 * 0.25
        expected = (PARAMS.ped_repulsion_strength * math.exp(-PARAMS.ped_decay_rate * gap)
                    * PARAMS.ped_anisotropy_floor)
        assert np.hypot(*force) == pytest.approx(expected, rel=1e-12)

    def test_touching_ahead_gives_full_strength(self):
        ego = ped(0.0, 0.0, 1.0, 0.0)
        other = ped(0.5, 0.0)    # distance exactly 2 * radius, dead ahead
        force = pedestrian_repulsive_force(ego, other, PARAMS, 0.25)
        assert np.hypot(*force) == pytest.approx(PARAMS.ped_repulsion_strength, rel=1e-12)
        assert force[0] < 0      # pushes away from the other

    def test_decay_value(self):
        # frozen oracle: beta = 3.00, separation gap of 1 m, head-on geometry
        params = ModelParams(ped_decay_rate=3.00)
        ego = ped(0.0, 0.0, 1.0, 0.0)
        other = ped(1.5, 0.0)    # distance 1.5, gap = 1.5 - 0.5 = 1.0
        force = pedestrian_repulsive_force(ego, other, params, 0.25)
        expected = params.ped_repulsion_strength * math.exp(-3.0)
        assert np.hypot(*force) == pytest.approx(expected, rel=1e-12)
        assert expected / params.ped_repulsion_strength == pytest.approx(0.0498, abs=5e-5)

    def test_direction_from_other_toward_ego(self):
        force = pedestrian_repulsive_force(ped(0.0, 0.0), ped(0.0, 2.0), PARAMS, 0.25)
        assert force[1] < 0 and force[0] == pytest.approx(0.0, abs=1e-12)

    def test_coincident_positions_deterministic(self):
        ego = ped(1.0, 1.0)
        twin = ped(1.0, 1.0)
        force = pedestrian_repulsive_force(ego, twin, PARAMS, 0.25)
        expected = PARAMS.ped_repulsion_strength * math.exp(2 * PARAMS.ped_decay_rate * 0.25)
        assert force[0] == pytest.approx(expected, rel=1e-12)
        assert force[1] == 0.0

    def test_anisotropy_range_over_angles(self):
        floor = PARAMS.ped_anisotropy_floor
        base = PARAMS.ped_repulsion_strength  # distance = 2 * radius below
        for angle in np.linspace(-math.pi, math.pi, 73):
            other = ped(0.5 * math.cos(angle), 0.5 * math.sin(angle))
            force = pedestrian_repulsive_force(ped(0, 0, 1, 0), other, PARAMS, 0.25)
            weight = np.hypot(*force) / base
            assert floor - 1e-12 <= weight <= 1.0 + 1e-12

    def test_monotone_decay_with_distance(self):
        mags = [np.hypot(*pedestrian_repulsive_force(ped(0, 0, 1, 0), ped(d, 0.0),
                                                     PARAMS, 0.25))
                for d in np.linspace(0.5, 5.0, 40)]
        assert all(a > b for a, b in zip(mags, mags[1:]))


class TestObstacleForce:
    def test_magnitude_at_radius_distance(self):
        wall = ObstacleShape(np.array([[0.0, -5.0], [0.0, 5.0]]))
        ego = ped(0.25, 0.0)
        force = obstacle_repulsive_force(ego, wall, PARAMS, 0.25)
        assert np.hypot(*force) == pytest.approx(PARAMS.obs_repulsion_strength, rel=1e-12)
        assert force[0] > 0

    def test_perpendicular_foot_inside_segment(self):
        wall = ObstacleShape(np.array([[-3.0, 1.0], [3.0, 1.0]]))
        ego = ped(0.7, 4.0)
        force = obstacle_repulsive_force(ego, wall, PARAMS, 0.25)
        # closest point is the perpendicular foot (0.7, 1.0): force straight up
        assert force[0] == pytest.approx(0.0, abs=1e-12)
        assert force[1] > 0
        ref, _ = brute_force_closest_on_shape(ego.position, wall)
        assert np.allclose(ref, [0.7, 1.0], atol=1e-3)

    def test_decay_value(self):
        params = ModelParams(obs_decay_rate=2.0)
        wall = ObstacleShape(np.array([[0.0, -5.0], [0.0, 5.0]]))
        ego = ped(0.75, 0.0)     # boundary distance 0.75, minus radius -> 0.5
        force = obstacle_repulsive_force(ego, wall, params, 0.25)
        expected = params.obs_repulsion_strength * math.exp(-1.0)
        assert np.hypot(*force) == pytest.approx(expected, rel=1e-12)
        assert expected / params.obs_repulsion_strength == pytest.approx(0.3679, abs=5e-5)

    def test_on_boundary_uses_edge_normal(self):
        wall = ObstacleShape(np.array([[-3.0, 0.0], [3.0, 0.0]]))
        force = obstacle_repulsive_force(ped(0.5, 0.0), wall, PARAMS, 0.25)
        assert np.hypot(*force) == pytest.approx(
            PARAMS.obs_repulsion_strength * math.exp(PARAMS.obs_decay_rate * 0.25), rel=1e-12)
        assert abs(force[1]) > 0 and force[0] == pytest.approx(0.0, abs=1e-12)

    def test_closed_polygon_outward_normal(self):
        square = ObstacleShape(np.array([[0, 0], [2, 0], [2, 2], [0, 2]], float),
                               closed=True)
        force = obstacle_repulsive_force(ped(1.0, -1.0), square, PARAMS, 0.25)
        assert force[1] < 0   # pushed away from the bottom edge

    def test_monotone_decay_with_distance(self):
        wall = ObstacleShape(np.array([[0.0, -5.0], [0.0, 5.0]]))
        mags = [np.hypot(*obstacle_repulsive_force(ped(d, 0.0), wall, PARAMS, 0.25))
                for d in np.linspace(0.3, 5.0, 40)]
        assert all(a > b for a, b in zip(mags, mags[1:]))


def waypoint(point, ego_pos):
    delta = np.asarray(point, float) - np.asarray(ego_pos, float)
    return TemporaryDestination(direction=math.atan2(delta[1], delta[0]),
                                distance=float(np.hypot(*delta)),
                                point=np.asarray(point, float))


class TestNavigationalForce:
    def test_zero_when_velocity_matches_target(self):
        ego_pos = np.array([0.0, 0.0])
        target = np.array([10.0, 0.0])
        d = np.hypot(*(target - ego_pos))
        v_tar = 1.2 * (target - ego_pos) / math.sqrt(d * d + PARAMS.nav_softening ** 2)
        ego = PedestrianState(position=ego_pos, velocity=v_tar)
        force = navigational_force(ego, waypoint(target, ego_pos), 1.2, PARAMS)
        assert np.allclose(force, 0.0, atol=1e-12)

    def test_far_target_speed_approaches_desired(self):
        ego = ped(0.0, 0.0)
        force = navigational_force(ego, waypoint((1e5, 0.0), (0.0, 0.0)), 1.5, PARAMS)
        assert np.hypot(*force) / PARAMS.nav_gain == pytest.approx(1.5, rel=1e-6)

    def test_target_at_softening_distance(self):
        ego = ped(0.0, 0.0)
        force = navigational_force(
            ego, waypoint((PARAMS.nav_softening, 0.0), (0.0, 0.0)), 1.5, PARAMS)
        assert np.hypot(*force) / PARAMS.nav_gain == pytest.approx(1.5 / math.sqrt(2), rel=1e-12)

    def test_at_waypoint_brakes(self):
        ego = ped(0.0, 0.0, 1.0, 0.5)
        wp = TemporaryDestination(0.0, 0.0, np.array([0.0, 0.0]))
        force = navigational_force(ego, wp, 1.5, PARAMS)
        assert np.allclose(force, -PARAMS.nav_gain * ego.velocity)


class TestLimiter:
    def test_unclamped_force_passes_through(self):
        prof = profile()
        force = np.array([50.0, 10.0])
        out = limit_total_force(force, np.array([0.5, 0.0]), prof, 0.5)
        assert np.array_equal(out, force)

    def test_acceleration_rescale_preserves_direction(self):
        prof = profile()
        force = prof.mass * 2 * prof.max_accel * np.array([0.6, 0.8])
        out = limit_total_force(force, np.zeros(2), prof, 0.01)
        assert np.hypot(*out) == pytest.approx(prof.mass * prof.max_accel, rel=1e-12)
        assert out[0] * force[1] - out[1] * force[0] == pytest.approx(0.0, abs=1e-9)

    def test_speed_stage_caps_new_speed_exactly(self):
        # frozen oracle: apply the two formulas by hand and compare speeds
        prof = profile()
        dt = 0.5
        v = np.array([prof.max_speed, 0.0])
        force = prof.mass * np.array([2.0, 0.0])   # within accel limit
        out = limit_total_force(force, v, prof, dt)
        v_new = v + out / prof.mass * dt
        assert np.hypot(*v_new) == pytest.approx(prof.max_speed, rel=1e-12)
        # independent evaluation
        a = force / prof.mass
        v_prime = v + a * dt
        a_hand = (prof.max_speed * v_prime / np.hypot(*v_prime) - v) / dt
        assert np.allclose(out, prof.mass * a_hand, rtol=1e-12)

    def test_limiter_bounds_randomized(self):
        rng = np.random.default_rng(7)
        prof = profile()
        dt = 0.5
        for _ in range(500):
            v = rng.normal(0, 1.2, 2)
            speed = np.hypot(*v)
            if speed > prof.max_speed:
                v *= prof.max_speed / speed
            force = rng.normal(0, 800.0, 2)
            out = limit_total_force(force, v, prof, dt)
            accel = out / prof.mass
            assert np.hypot(*accel) <= prof.max_accel * (1 + 1e-9)
            v_new = v + accel * dt
            assert np.hypot(*v_new) <= prof.max_speed * (1 + 1e-9)


class TestIntegrate:
    def test_zero_force_constant_velocity(self):
        state = ped(1.0, 2.0, 0.3, -0.4)
        out = integrate_step(state, np.zeros(2), 70.0, 0.5)
        assert np.allclose(out.velocity, state.velocity)
        assert np.allclose(out.position, state.position + state.velocity * 0.5)

    def test_vanishing_dt_keeps_state(self):
        state = ped(1.0, 2.0, 0.3, -0.4)
        out = integrate_step(state, np.array([100.0, -50.0]), 70.0, 1e-12)
        assert np.allclose(out.position, state.position, atol=1e-9)
        assert np.allclose(out.velocity, state.velocity, atol=1e-9)

    def test_hand_applied_update(self):
        # v' = v + (F/m) dt = (1, 0); p' = p + v' dt = p + (0.5, 0)
        state = ped(2.0, 3.0, 0.0, 0.0)
        out = integrate_step(state, np.array([2.0, 0.0]) * 70.0, 70.0, 0.5)
        assert np.allclose(out.velocity, [1.0, 0.0])
        assert np.allclose(out.position, [2.5, 3.0])

    def test_position_uses_updated_velocity(self):
        # semi-implicit: the position step must see the new velocity
        state = ped(0.0, 0.0, 0.0, 0.0)
        out = integrate_step(state, np.array([70.0, 0.0]), 70.0, 1.0)
        assert out.position[0] == pytest.approx(1.0)   # explicit Euler would give 0


class TestPurityAndCovariance:
    def test_bit_identical_repeat_calls(self):
        ego = ped(0.3, -0.2, 1.0, 0.1)
        veh = vehicle(x=2.0, y=1.0, heading=0.3, speed=1.2)
        a = vehicle_repulsive_force(ego, veh, PARAMS)
        b = vehicle_repulsive_force(ego, veh, PARAMS)
        assert np.array_equal(a, b)
        other = ped(1.0, 0.5, -0.5, 0.0)
        a = pedestrian_repulsive_force(ego, other, PARAMS, 0.25)
        b = pedestrian_repulsive_force(ego, other, PARAMS, 0.25)
        assert np.array_equal(a, b)

    @pytest.mark.parametrize("angle,shift", [(0.9, (3.0, -1.5)), (-2.2, (-7.0, 4.0))])
    def test_frame_covariance_of_forces(self, angle, shift):
        rot = rot_matrix(angle)
        shift = np.array(shift)
        ego = ped(0.4, -0.6, 0.9, 0.2)
        ego_t = PedestrianState(rot @ ego.position + shift, rot @ ego.velocity)

        veh = vehicle(x=2.5, y=0.5, heading=0.4, speed=1.0)
        veh_t = VehicleState(rot @ veh.position + shift, veh.heading + angle,
                             veh.speed, veh.center_to_front, veh.center_to_rear,
                             veh.half_width)
        f = vehicle_repulsive_force(ego, veh, PARAMS)
        f_t = vehicle_repulsive_force(ego_t, veh_t, PARAMS)
        assert np.allclose(f_t, rot @ f, atol=1e-9)

        other = ped(1.4, 0.3, -0.8, 0.1)
        other_t = PedestrianState(rot @ other.position + shift, rot @ other.velocity)
        f = pedestrian_repulsive_force(ego, other, PARAMS, 0.25)
        f_t = pedestrian_repulsive_force(ego_t, other_t, PARAMS, 0.25)
        assert np.allclose(f_t, rot @ f, atol=1e-9)

        wall = ObstacleShape(np.array([[2.0, -2.0], [2.0, 2.0]]))
        wall_t = ObstacleShape((rot @ wall.vertices.T).T + shift)
        f = obstacle_repulsive_force(ego, wall, PARAMS, 0.25)
        f_t = obstacle_repulsive_force(ego_t, wall_t, PARAMS, 0.25)
        assert np.allclose(f_t, rot @ f, atol=1e-9)
