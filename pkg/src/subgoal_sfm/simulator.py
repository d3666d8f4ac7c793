"""Scenario execution: synchronous pedestrian updates plus vehicle policies."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import to_local, wrap_angle
from .model import pedestrian_model_step
from .params import ModelParams, make_profile
from .states import ObstacleShape, PedestrianState, Surroundings, VehicleState


class SimulationError(RuntimeError):
    """Raised when an agent state stops being finite."""


@dataclass
class PurePursuit:
    """Follow a reference path at constant speed with a kinematic bicycle."""

    path: np.ndarray              # (k, 2) polyline
    cruise_speed: float
    lookahead: float = 4.0        # m
    wheelbase: float = 2.7        # m

    def __post_init__(self):
        self.path = np.asarray(self.path, dtype=float)
        if self.path.ndim != 2 or self.path.shape[0] < 2 or self.path.shape[1] != 2:
            raise ValueError("reference path needs at least 2 points")
        if self.cruise_speed < 0 or self.lookahead <= 0:
            raise ValueError("need cruise_speed >= 0 and lookahead > 0")


@dataclass
class Replay:
    """Interpolate a recorded pose sequence; time-monotone."""

    times: np.ndarray             # (k,)
    poses: np.ndarray             # (k, 3) x, y, heading

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.poses = np.asarray(self.poses, dtype=float)
        if np.any(np.diff(self.times) <= 0):
            raise ValueError("replay times must be strictly increasing")
        if self.poses.shape != (self.times.shape[0], 3):
            raise ValueError("replay poses must be (k, 3)")


@dataclass
class Static:
    """Vehicle does not move."""


@dataclass
class PedestrianSetup:
    state: PedestrianState
    destination: np.ndarray
    desired_speed: float
    flow: int = 0

    def __post_init__(self):
        self.destination = np.asarray(self.destination, dtype=float)


@dataclass
class VehicleSetup:
    state: VehicleState
    policy: PurePursuit | Replay | Static


@dataclass
class ScenarioConfig:
    scenario_id: str
    pedestrians: list[PedestrianSetup]
    vehicles: list[VehicleSetup] = field(default_factory=list)
    obstacles: list[ObstacleShape] = field(default_factory=list)
    t_end: float = 60.0
    dt: float = 0.5
    seed: int = 0

    def __post_init__(self):
        if self.t_end <= 0 or self.dt <= 0:
            raise ValueError("t_end and dt must be positive")

    @property
    def step_count(self) -> int:
        return int(math.floor(self.t_end / self.dt)) + 1


@dataclass
class SimulationResult:
    times: np.ndarray             # (T,)
    ped_positions: np.ndarray     # (T, n, 2)
    ped_velocities: np.ndarray    # (T, n, 2)
    veh_poses: np.ndarray         # (T, m, 3) x, y, heading
    veh_speeds: np.ndarray        # (T, m)
    veh_dims: np.ndarray          # (m, 3) center_to_front, center_to_rear, half_width
    collided: np.ndarray          # (n,) bool, ever strictly inside a vehicle body
    config: ScenarioConfig


def _lookahead_point(policy: PurePursuit, position: np.ndarray):
    """Point on the path one lookahead arc ahead of the closest path point."""
    pts = policy.path
    seg = pts[1:] - pts[:-1]
    seg_len = np.hypot(seg[:, 0], seg[:, 1])
    safe = np.where(seg_len == 0.0, 1.0, seg_len)
    t = ((position[0] - pts[:-1, 0]) * seg[:, 0]
         + (position[1] - pts[:-1, 1]) * seg[:, 1]) / safe ** 2
    t = np.clip(t, 0.0, 1.0)
    qx = pts[:-1, 0] + t * seg[:, 0]
    qy = pts[:-1, 1] + t * seg[:, 1]
    dist = np.hypot(position[0] - qx, position[1] - qy)
    i = int(np.argmin(dist))

    cum = np.concatenate([[0.0], np.cumsum(seg_len)])
    s_here = cum[i] + t[i] * seg_len[i]
    s_target = s_here + policy.lookahead
    if s_target >= cum[-1]:
        return None
    j = int(np.searchsorted(cum, s_target, side="right")) - 1
    j = min(j, len(seg_len) - 1)
    frac = (s_target - cum[j]) / safe[j]
    return pts[j] + frac * seg[j]


def pure_pursuit_step(veh: VehicleState, policy: PurePursuit, dt: float) -> VehicleState:
    """One kinematic-bicycle update chasing the lookahead point.

    Past the end of the path the heading is held and the vehicle keeps
    cruising straight.
    """
    target = _lookahead_point(policy, veh.position)
    speed = policy.cruise_speed
    if target is None:
        steer = 0.0
    else:
        local = to_local(target, veh.position, veh.heading)
        ld = math.hypot(local[0], local[1])
        curvature = 0.0 if ld == 0.0 else 2.0 * local[1] / (ld * ld)
        steer = math.atan(curvature * policy.wheelbase)

    c, s = math.cos(veh.heading), math.sin(veh.heading)
    position = veh.position + speed * dt * np.array([c, s])
    heading = wrap_angle(veh.heading + speed * math.tan(steer) / policy.wheelbase * dt)
    return VehicleState(position=position, heading=heading, speed=speed,
                        center_to_front=veh.center_to_front,
                        center_to_rear=veh.center_to_rear,
                        half_width=veh.half_width)


def _replay_pose(policy: Replay, t: float):
    times, poses = policy.times, policy.poses
    t = min(max(t, times[0]), times[-1])
    x = np.interp(t, times, poses[:, 0])
    y = np.interp(t, times, poses[:, 1])
    heading = np.interp(t, times, np.unwrap(poses[:, 2]))
    return float(x), float(y), wrap_angle(float(heading))


def advance_vehicle(veh: VehicleState, policy, t_next: float, dt: float) -> VehicleState:
    if isinstance(policy, PurePursuit):
        return pure_pursuit_step(veh, policy, dt)
    if isinstance(policy, Replay):
        x, y, heading = _replay_pose(policy, t_next)
        speed = math.hypot(x - veh.position[0], y - veh.position[1]) / dt
        return VehicleState(position=np.array([x, y]), heading=heading, speed=speed,
                            center_to_front=veh.center_to_front,
                            center_to_rear=veh.center_to_rear,
                            half_width=veh.half_width)
    if isinstance(policy, Static):
        return veh
    raise TypeError(f"unknown vehicle policy: {type(policy).__name__}")


def point_in_vehicle_body(point: np.ndarray, pose, dims) -> bool:
    """Strictly inside the physical body rectangle (no predicted extension)."""
    origin = np.array([pose[0], pose[1]])
    local = to_local(point, origin, pose[2])
    front, rear, half_w = dims[0], dims[1], dims[2]
    return (-rear < local[0] < front) and (abs(local[1]) < half_w)


def run_process(config: ScenarioConfig, params: ModelParams,
                profile_defaults: dict | None = None) -> SimulationResult:
    """Run the collective-motion process over one scenario.

    All pedestrians advance against the states frozen at the current step
    (synchronous update), then the vehicles follow their policies.
    """
    n = len(config.pedestrians)
    m = len(config.vehicles)
    steps = config.step_count
    dt = config.dt

    profiles = [make_profile(p.destination, p.desired_speed, profile_defaults)
                for p in config.pedestrians]
    peds = [p.state for p in config.pedestrians]
    vehicles = [v.state for v in config.vehicles]

    times = np.arange(steps) * dt
    ped_pos = np.zeros((steps, n, 2))
    ped_vel = np.zeros((steps, n, 2))
    veh_pose = np.zeros((steps, m, 3))
    veh_speed = np.zeros((steps, m))
    veh_dims = np.array([[v.state.center_to_front, v.state.center_to_rear,
                          v.state.half_width] for v in config.vehicles]).reshape(m, 3)
    collided = np.zeros(n, dtype=bool)

    for k in range(steps):
        for i, ped in enumerate(peds):
            ped_pos[k, i] = ped.position
            ped_vel[k, i] = ped.velocity
        for j, veh in enumerate(vehicles):
            veh_pose[k, j] = (veh.position[0], veh.position[1], veh.heading)
            veh_speed[k, j] = veh.speed
        for i, ped in enumerate(peds):
            for j, veh in enumerate(vehicles):
                if point_in_vehicle_body(ped.position, veh_pose[k, j], veh_dims[j]):
                    collided[i] = True
        if k == steps - 1:
            break

        new_peds = []
        for i, ped in enumerate(peds):
            others = peds[:i] + peds[i + 1:]
            sur = Surroundings(pedestrians=others, vehicles=vehicles,
                               obstacles=config.obstacles)
            try:
                nxt = pedestrian_model_step(ped, profiles[i], sur, params, dt)
            except (ValueError, FloatingPointError) as exc:
                raise SimulationError(
                    f"non-finite state for pedestrian {i} at step {k + 1} "
                    f"(t = {(k + 1) * dt:.2f} s): {exc}") from exc
            if not (np.all(np.isfinite(nxt.position)) and np.all(np.isfinite(nxt.velocity))):
                raise SimulationError(
                    f"non-finite state for pedestrian {i} at step {k + 1} "
                    f"(t = {(k + 1) * dt:.2f} s)")
            new_peds.append(nxt)
        peds = new_peds

        t_next = (k + 1) * dt
        vehicles = [advance_vehicle(veh, setup.policy, t_next, dt)
                    for veh, setup in zip(vehicles, config.vehicles)]
        for j, veh in enumerate(vehicles):
            if not np.all(np.isfinite(veh.position)):
                raise SimulationError(f"non-finite state for vehicle {j} at step {k + 1}")

    return SimulationResult(times=times, ped_positions=ped_pos, ped_velocities=ped_vel,
                            veh_poses=veh_pose, veh_speeds=veh_speed, veh_dims=veh_dims,
                            collided=collided, config=config)
