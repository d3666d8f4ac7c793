"""Repulsive and navigational force fields acting on one pedestrian."""

from __future__ import annotations

import math

import numpy as np

from .geometry import closest_point_on_segment, to_local
from .params import ModelParams, PedestrianProfile
from .states import (ObstacleShape, PedestrianState, TemporaryDestination,
                     VehicleState)

_COINCIDENT = 1e-12


def _anisotropy(velocity: np.ndarray, toward_other: np.ndarray, floor: float) -> float:
    """Angular weight in [floor, 1]: 1 toward agents ahead, floor behind.

    Degenerate inputs (standing ego, coincident agents) take full weight.
    """
    nv = math.hypot(velocity[0], velocity[1])
    nr = math.hypot(toward_other[0], toward_other[1])
    if nv < _COINCIDENT or nr < _COINCIDENT:
        cos_angle = 1.0
    else:
        cos_angle = (velocity[0] * toward_other[0] + velocity[1] * toward_other[1]) / (nv * nr)
        cos_angle = min(1.0, max(-1.0, cos_angle))
    return floor + (1.0 - floor) * (1.0 + cos_angle) / 2.0


def vehicle_repulsive_force(ego: PedestrianState, veh: VehicleState,
                            params: ModelParams) -> np.ndarray:
    """Lateral push away from the vehicle's current and predicted path.

    In the vehicle frame the force points along +/-y (away from the
    centerline; +y on the centerline itself). Its magnitude is a lateral
    exponential decay from the body side times a longitudinal window that
    is 1 alongside the body and its predicted reach, fades linearly across
    the front buffer, and is 0 beyond it or behind the rear bumper.
    """
    rel = to_local(ego.position, veh.position, veh.heading)
    x, y = rel[0], rel[1]

    front = veh.front_reach(params.veh_lookahead_time)
    if -veh.center_to_rear < x <= front:
        m_lon = 1.0
    elif front < x < front + params.veh_front_buffer:
        m_lon = 1.0 - (x - front) / params.veh_front_buffer
    else:
        m_lon = 0.0

    d_lat = max(0.0, abs(y) - veh.half_width)
    m_lat = params.veh_repulsion_strength * math.exp(-params.veh_decay_rate * d_lat)

    side = 1.0 if y >= 0.0 else -1.0
    magnitude = m_lat * m_lon
    c, s = math.cos(veh.heading), math.sin(veh.heading)
    return magnitude * side * np.array([-s, c])


def pedestrian_repulsive_force(ego: PedestrianState, other: PedestrianState,
                               params: ModelParams, radius: float) -> np.ndarray:
    """Exponential push from another pedestrian, weighted by anisotropy."""
    delta = ego.position - other.position
    dist = math.hypot(delta[0], delta[1])
    weight = _anisotropy(ego.velocity, -delta, params.ped_anisotropy_floor)
    magnitude = params.ped_repulsion_strength * math.exp(
        -params.ped_decay_rate * (dist - 2.0 * radius))
    if dist < _COINCIDENT:
        # coincident agents: deterministic escape along world +x
        return magnitude * weight * np.array([1.0, 0.0])
    return (magnitude * weight / dist) * delta


def _closest_boundary_point(shape: ObstacleShape, p: np.ndarray) -> tuple[np.ndarray, int]:
    p0, p1 = shape.edges()
    best = None
    best_d2 = math.inf
    best_i = 0
    for i in range(p0.shape[0]):
        q = closest_point_on_segment(p, p0[i], p1[i])
        d2 = (p[0] - q[0]) ** 2 + (p[1] - q[1]) ** 2
        if d2 < best_d2:
            best_d2 = d2
            best = q
            best_i = i
    return best, best_i


def _edge_outward_normal(shape: ObstacleShape, edge_index: int) -> np.ndarray:
    p0, p1 = shape.edges()
    e = p1[edge_index] - p0[edge_index]
    n = np.array([-e[1], e[0]])
    n /= math.hypot(n[0], n[1])
    if shape.closed and shape.vertices.shape[0] > 2:
        v = shape.vertices
        area2 = float(np.sum(v[:, 0] * np.roll(v[:, 1], -1) - np.roll(v[:, 0], -1) * v[:, 1]))
        if area2 > 0.0:          # counterclockwise ring: outward is the right normal
            n = -n
    return n


def obstacle_repulsive_force(ego: PedestrianState, obstacle: ObstacleShape,
                             params: ModelParams, radius: float) -> np.ndarray:
    """Exponential push from the closest point on an obstacle boundary."""
    q, edge = _closest_boundary_point(obstacle, ego.position)
    delta = ego.position - q
    dist = math.hypot(delta[0], delta[1])
    magnitude = params.obs_repulsion_strength * math.exp(
        -params.obs_decay_rate * (dist - radius))
    if dist < _COINCIDENT:
        return magnitude * _edge_outward_normal(obstacle, edge)
    return (magnitude / dist) * delta


def navigational_force(ego: PedestrianState, waypoint: TemporaryDestination,
                       desired_speed: float, params: ModelParams) -> np.ndarray:
    """Steer the velocity toward the current waypoint at the desired speed.

    The target speed rolls off smoothly as the waypoint gets closer than
    the softening length, so arrivals brake instead of oscillating.
    """
    dx = waypoint.point[0] - ego.position[0]
    dy = waypoint.point[1] - ego.position[1]
    scale = desired_speed / math.sqrt(dx * dx + dy * dy + params.nav_softening ** 2)
    v_tar = np.array([scale * dx, scale * dy])
    return params.nav_gain * (v_tar - ego.velocity)


def limit_total_force(force: np.ndarray, velocity: np.ndarray,
                      profile: PedestrianProfile, dt: float) -> np.ndarray:
    """Clamp to the acceleration limit, then to the speed limit."""
    accel = force / profile.mass
    a_norm = math.hypot(accel[0], accel[1])
    if a_norm > profile.max_accel:
        accel = accel * (profile.max_accel / a_norm)
    v_next = velocity + accel * dt
    v_norm = math.hypot(v_next[0], v_next[1])
    if v_norm > profile.max_speed:
        accel = (v_next * (profile.max_speed / v_norm) - velocity) / dt
    return profile.mass * accel


def integrate_step(state: PedestrianState, force: np.ndarray, mass: float,
                   dt: float) -> PedestrianState:
    """Semi-implicit Euler: velocity first, position with the new velocity."""
    velocity = state.velocity + (force / mass) * dt
    position = state.position + velocity * dt
    return PedestrianState(position=position, velocity=velocity)
