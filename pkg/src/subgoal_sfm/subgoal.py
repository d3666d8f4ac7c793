"""Per-step waypoint selection from a fan of candidate walking directions.

A fan of nav_directions + 1 rays is centered on the bearing of the final
destination. Each ray is tested against the occupancies of surrounding
agents: pedestrians block as capsules swept along their current velocity
over a short horizon, vehicles block as their body rectangle extended to
the front impact line and inflated by the ego radius, obstacles block as
their boundary segments. The waypoint is picked by three rules, in order:

1. the passable ray closest in angle to the destination bearing,
2. failing that, the closest ray whose first hit is not the vehicle front
   impact line,
3. failing that, the fan edge nearer the ego's current walking direction.

Blocked rays carry a shortened range (hit distance minus the ego radius),
so even rule-3 picks yield a reachable waypoint. The usable range is also
capped by the distance to the final destination: as the goal comes within
reach the waypoint converges onto it and the softened target velocity
brakes the arrival instead of orbiting past it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (angle_gap, point_segments_distance, ray_capsules_hit,
                       ray_rect_hit, ray_segments_hit, to_local)
from .params import ModelParams
from .states import (ObstacleShape, PedestrianState, Surroundings,
                     TemporaryDestination, VehicleState)


@dataclass
class _Scene:
    """Packed obstruction geometry near the ego, in world coordinates."""

    capsule_p0: np.ndarray        # (n, 2) surrounding-pedestrian sweep starts
    capsule_p1: np.ndarray        # (n, 2) sweep ends
    capsule_radius: float
    capsule_inside: np.ndarray    # (n,) ego already within a capsule
    vehicles: list[VehicleState]
    segments: tuple[np.ndarray, np.ndarray] | None   # obstacle edges (p0, p1)

    @property
    def empty(self) -> bool:
        return (self.capsule_p0.shape[0] == 0 and not self.vehicles
                and self.segments is None)


def _vehicle_rect(veh: VehicleState, params: ModelParams, radius: float):
    """Inflated occupancy rectangle bounds in the vehicle frame."""
    x_min = -veh.center_to_rear - radius
    x_max = veh.front_reach(params.veh_lookahead_time) + radius
    y_max = veh.half_width + radius
    return x_min, x_max, -y_max, y_max


def collect_scene(ego_position: np.ndarray, surroundings: Surroundings,
                  params: ModelParams, radius: float) -> _Scene:
    """Gather occupancies that could block a ray within the usable range."""
    reach = params.nav_range + radius
    cap_r = 2.0 * radius

    p0_list, p1_list = [], []
    for other in surroundings.pedestrians:
        a = other.position
        b = other.position + other.velocity * params.ped_predict_horizon
        p0_list.append(a)
        p1_list.append(b)
    if p0_list:
        p0 = np.asarray(p0_list)
        p1 = np.asarray(p1_list)
        sweep_dist = point_segments_distance(ego_position, p0, p1)
        near = sweep_dist <= cap_r + reach
        p0, p1 = p0[near], p1[near]
        inside = sweep_dist[near] <= cap_r
    else:
        p0 = np.zeros((0, 2))
        p1 = np.zeros((0, 2))
        inside = np.zeros(0, dtype=bool)

    vehicles = []
    for veh in surroundings.vehicles:
        x_min, x_max, _, y_max = _vehicle_rect(veh, params, radius)
        circum = math.hypot(max(-x_min, x_max), y_max)
        gap = math.hypot(ego_position[0] - veh.position[0],
                         ego_position[1] - veh.position[1])
        if gap <= circum + reach:
            vehicles.append(veh)

    seg0_list, seg1_list = [], []
    for obstacle in surroundings.obstacles:
        s0, s1 = obstacle.edges()
        near = point_segments_distance(ego_position, s0, s1) <= reach
        if np.any(near):
            seg0_list.append(s0[near])
            seg1_list.append(s1[near])
    segments = None
    if seg0_list:
        segments = (np.vstack(seg0_list), np.vstack(seg1_list))

    return _Scene(p0, p1, cap_r, inside, vehicles, segments)


def scan_fan(origin: np.ndarray, dirs: np.ndarray, scene: _Scene,
             params: ModelParams, radius: float) -> tuple[np.ndarray, np.ndarray]:
    """First-hit distance per ray and whether that hit is a vehicle front line."""
    count = dirs.shape[0]
    best = np.full(count, np.inf)
    front_best = np.full(count, np.inf)

    if scene.capsule_p0.shape[0] > 0:
        hits = ray_capsules_hit(origin, dirs, scene.capsule_p0, scene.capsule_p1,
                                scene.capsule_radius, inside=scene.capsule_inside)
        best = np.minimum(best, hits.min(axis=1))

    for veh in scene.vehicles:
        origin_local = to_local(origin, veh.position, veh.heading)
        c, s = math.cos(veh.heading), math.sin(veh.heading)
        dirs_local = np.stack([c * dirs[:, 0] + s * dirs[:, 1],
                               -s * dirs[:, 0] + c * dirs[:, 1]], axis=1)
        x_min, x_max, y_min, y_max = _vehicle_rect(veh, params, radius)
        dist, on_front = ray_rect_hit(origin_local, dirs_local,
                                      x_min, x_max, y_min, y_max)
        best = np.minimum(best, dist)
        front_best = np.minimum(front_best, np.where(on_front, dist, np.inf))

    if scene.segments is not None:
        hits = ray_segments_hit(origin, dirs, scene.segments[0], scene.segments[1])
        best = np.minimum(best, hits.min(axis=1))

    is_front = np.isfinite(best) & (front_best <= best)
    return best, is_front


def temporary_destination(ego: PedestrianState, surroundings: Surroundings,
                          destination: np.ndarray, params: ModelParams,
                          radius: float) -> TemporaryDestination:
    p = ego.position
    gx = destination[0] - p[0]
    gy = destination[1] - p[1]
    goal_distance = math.hypot(gx, gy)
    if goal_distance == 0.0:
        return TemporaryDestination(0.0, 0.0, np.asarray(destination, float).copy())
    goal_angle = math.atan2(gy, gx)
    max_range = min(params.nav_range, goal_distance)

    scene = collect_scene(p, surroundings, params, radius)
    if not scene.empty:
        # the goal-aligned ray has angular offset 0, so whenever it is
        # passable it wins the argmin outright; skip the rest of the fan
        center = np.array([[math.cos(goal_angle), math.sin(goal_angle)]])
        center_hit, _ = scan_fan(p, center, scene, params, radius)
        center_clear = center_hit[0] - radius >= max_range
    else:
        center_clear = True
    if center_clear:
        point = p + max_range * np.array([math.cos(goal_angle),
                                          math.sin(goal_angle)])
        return TemporaryDestination(goal_angle, max_range, point)

    half = params.nav_directions // 2
    offsets = (np.arange(params.nav_directions + 1) - half) * params.nav_angle_step
    angles = goal_angle + offsets
    dirs = np.stack([np.cos(angles), np.sin(angles)], axis=1)

    hits, is_front = scan_fan(p, dirs, scene, params, radius)
    ranges = np.minimum(max_range, np.maximum(hits - radius, 0.0))
    passable = hits - radius >= max_range

    score = np.abs(offsets)
    if passable.any():
        candidates = np.flatnonzero(passable)
    elif (~is_front).any():
        candidates = np.flatnonzero(~is_front)
    else:
        ego_angle = math.atan2(ego.velocity[1], ego.velocity[0])
        if angle_gap(ego_angle, angles[0]) < angle_gap(ego_angle, angles[-1]):
            best_j = 0
        else:
            best_j = params.nav_directions
        candidates = None

    if candidates is not None:
        best_j = int(candidates[np.argmin(score[candidates])])

    distance = float(ranges[best_j])
    point = p + distance * dirs[best_j]
    return TemporaryDestination(float(angles[best_j]), distance, point)
