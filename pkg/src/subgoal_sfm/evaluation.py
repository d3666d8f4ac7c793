"""Trajectory metrics, baseline models, and per-dataset scoring.

aADE and aFDE rescale the usual displacement errors by k0/k so that
samples of different lengths are comparable; CI is the fraction of
simulated points that fall inside a vehicle body.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .calibration import GroupModel, ParamVector, replay_sample
from .dataio import DataSample
from .forces import _closest_boundary_point
from .geometry import to_local, to_world
from .model import pedestrian_model_step
from .params import ModelParams, PedestrianProfile, make_profile
from .states import ObstacleShape, PedestrianState, Surroundings

DEFAULT_NORM_STEPS = 10


@dataclass
class MetricScores:
    aade: float
    afde: float
    ci: float


def compute_aade(sim_positions: np.ndarray, gt_positions: np.ndarray,
                 norm_steps: int = DEFAULT_NORM_STEPS) -> float:
    """Mean displacement over steps 1..k, scaled by norm_steps/k."""
    if sim_positions.shape != gt_positions.shape:
        raise ValueError("trajectory length mismatch")
    k = sim_positions.shape[0] - 1
    if k < 1:
        raise ValueError("trajectories need at least 2 points")
    diff = sim_positions[1:] - gt_positions[1:]
    ade = float(np.mean(np.hypot(diff[:, 0], diff[:, 1])))
    return (norm_steps / k) * ade


def compute_afde(sim_positions: np.ndarray, gt_positions: np.ndarray,
                 norm_steps: int = DEFAULT_NORM_STEPS) -> float:
    """Final-point displacement scaled by norm_steps/k."""
    if sim_positions.shape != gt_positions.shape:
        raise ValueError("trajectory length mismatch")
    k = sim_positions.shape[0] - 1
    if k < 1:
        raise ValueError("trajectories need at least 2 points")
    fde = math.hypot(sim_positions[-1, 0] - gt_positions[-1, 0],
                     sim_positions[-1, 1] - gt_positions[-1, 1])
    return (norm_steps / k) * fde


def compute_ci(sim_positions: np.ndarray, veh_poses: np.ndarray,
               veh_dims: np.ndarray) -> float:
    """Fraction of points strictly inside any vehicle body at the same step."""
    steps = sim_positions.shape[0]
    if steps == 0:
        return 0.0
    inside = 0
    for i in range(steps):
        for j in range(veh_poses.shape[1]):
            pose = veh_poses[i, j]
            if not np.isfinite(pose[0]):
                continue
            local = to_local(sim_positions[i], pose[:2], pose[2])
            if (-veh_dims[j, 1] < local[0] < veh_dims[j, 0]
                    and abs(local[1]) < veh_dims[j, 2]):
                inside += 1
                break
    return inside / steps


def threshold_curve(errors, thresholds) -> np.ndarray:
    """Fraction of samples with error strictly below each threshold."""
    errors = np.asarray(errors, dtype=float)
    if errors.size == 0:
        raise ValueError("threshold_curve needs at least one error value")
    return np.array([float(np.mean(errors < t)) for t in thresholds])


def cv_baseline_step(state: PedestrianState, profile: PedestrianProfile,
                     dt: float) -> PedestrianState:
    """Constant-velocity reference: straight to the goal, no interactions."""
    delta = profile.destination - state.position
    dist = math.hypot(delta[0], delta[1])
    step_len = profile.desired_speed * dt
    if dist == 0.0:
        velocity = np.zeros(2)
        position = state.position.copy()
    elif dist <= step_len:
        velocity = delta / dt
        position = profile.destination.copy()
    else:
        velocity = (profile.desired_speed / dist) * delta
        position = state.position + velocity * dt
    return PedestrianState(position=position, velocity=velocity)


@dataclass
class SfmParams:
    """Constants of the classic social-force baseline (published values)."""

    strength: float = 2000.0      # N
    falloff: float = 0.08         # m
    relax_time: float = 0.5       # s
    radius: float = 0.25          # m
    veh_lookahead_time: float = 2.0   # extends the vehicle box to its front line


def _vehicle_box(veh, lookahead_time: float) -> ObstacleShape:
    """Current body plus predicted reach, as a closed rectangle."""
    front = veh.front_reach(lookahead_time)
    corners_local = [(-veh.center_to_rear, -veh.half_width),
                     (front, -veh.half_width),
                     (front, veh.half_width),
                     (-veh.center_to_rear, veh.half_width)]
    pts = [to_world(np.array(c), veh.position, veh.heading) for c in corners_local]
    return ObstacleShape(vertices=np.array(pts), closed=True)


def sfm_baseline_step(state: PedestrianState, profile: PedestrianProfile,
                      surroundings: Surroundings, sfm: SfmParams,
                      dt: float) -> PedestrianState:
    """Classic social-force update without the panic-era friction term.

    Vehicles are treated as static rectangular obstacles covering the
    current body and its predicted reach; the nearest boundary point
    repels like a wall.
    """
    delta = profile.destination - state.position
    dist = math.hypot(delta[0], delta[1])
    if dist == 0.0:
        desired = np.zeros(2)
    else:
        desired = (profile.desired_speed / dist) * delta
    force = profile.mass * (desired - state.velocity) / sfm.relax_time

    for other in surroundings.pedestrians:
        gap = state.position - other.position
        d = math.hypot(gap[0], gap[1])
        if d == 0.0:
            continue
        mag = sfm.strength * math.exp((2.0 * sfm.radius - d) / sfm.falloff)
        force = force + (mag / d) * gap

    walls = list(surroundings.obstacles)
    walls.extend(_vehicle_box(veh, sfm.veh_lookahead_time)
                 for veh in surroundings.vehicles)
    for wall in walls:
        q, _edge = _closest_boundary_point(wall, state.position)
        gap = state.position - q
        d = math.hypot(gap[0], gap[1])
        if d == 0.0:
            continue
        mag = sfm.strength * math.exp((sfm.radius - d) / sfm.falloff)
        force = force + (mag / d) * gap

    velocity = state.velocity + (force / profile.mass) * dt
    speed = math.hypot(velocity[0], velocity[1])
    if speed > profile.max_speed:
        velocity = velocity * (profile.max_speed / speed)
    position = state.position + velocity * dt
    return PedestrianState(position=position, velocity=velocity)


class ConstantVelocityModel:
    """CV baseline: ignores every surrounding agent."""

    name = "cv"

    def step_fn(self, sample: DataSample):
        def step(state, profile, _surroundings, _i):
            return cv_baseline_step(state, profile, sample.dt)
        return step


class OrdinarySfmModel:
    """Classic social-force baseline."""

    name = "sfm"

    def __init__(self, sfm: SfmParams | None = None):
        self.sfm = sfm or SfmParams()

    def step_fn(self, sample: DataSample):
        def step(state, profile, surroundings, _i):
            return sfm_baseline_step(state, profile, surroundings, self.sfm, sample.dt)
        return step


class SubgoalModel:
    """The full model, optionally with a calibrated parameter vector."""

    name = "sgsfm"

    def __init__(self, base: ModelParams, theta: ParamVector | None = None):
        self.params = theta.apply(base) if theta is not None else base

    def step_fn(self, sample: DataSample):
        def step(state, profile, surroundings, _i):
            return pedestrian_model_step(state, profile, surroundings,
                                         self.params, sample.dt)
        return step


class GroupedSubgoalModel:
    """Group-calibrated model: each sample uses its assigned group's vector."""

    name = "sgsfm-group"

    def __init__(self, base: ModelParams, group_model: GroupModel):
        self.base = base
        self.group_model = group_model

    def params_for(self, sample_index: int) -> ModelParams:
        g = int(self.group_model.assignments[sample_index])
        return self.group_model.group_thetas[g].apply(self.base)


def evaluate_model(model, samples: list[DataSample],
                   norm_steps: int = DEFAULT_NORM_STEPS,
                   profile_defaults: dict | None = None) -> MetricScores:
    """Replay every sample under the model and average aADE/aFDE/CI."""
    if not samples:
        raise ValueError("evaluate_model needs at least one sample")
    if isinstance(model, GroupedSubgoalModel):
        if len(samples) != model.group_model.assignments.shape[0]:
            raise ValueError("sample count does not match group assignments")

    aade_total = afde_total = ci_total = 0.0
    for idx, sample in enumerate(samples):
        profile = make_profile(sample.destination, sample.desired_speed,
                               profile_defaults)
        if isinstance(model, GroupedSubgoalModel):
            params = model.params_for(idx)

            def step(state, prof, surroundings, _i, _params=params):
                return pedestrian_model_step(state, prof, surroundings,
                                             _params, sample.dt)
        else:
            step = model.step_fn(sample)
        sim = replay_sample(step, sample, profile)
        aade_total += compute_aade(sim, sample.ego_positions, norm_steps)
        afde_total += compute_afde(sim, sample.ego_positions, norm_steps)
        ci_total += compute_ci(sim, sample.veh_poses, sample.veh_dims)
    n = len(samples)
    return MetricScores(aade=aade_total / n, afde=afde_total / n, ci=ci_total / n)


def per_sample_aade(model, samples: list[DataSample],
                    norm_steps: int = DEFAULT_NORM_STEPS,
                    profile_defaults: dict | None = None) -> np.ndarray:
    """aADE per sample, for threshold-coverage curves."""
    values = []
    for idx, sample in enumerate(samples):
        profile = make_profile(sample.destination, sample.desired_speed,
                               profile_defaults)
        if isinstance(model, GroupedSubgoalModel):
            params = model.params_for(idx)

            def step(state, prof, surroundings, _i, _params=params):
                return pedestrian_model_step(state, prof, surroundings,
                                             _params, sample.dt)
        else:
            step = model.step_fn(sample)
        sim = replay_sample(step, sample, profile)
        values.append(compute_aade(sim, sample.ego_positions, norm_steps))
    return np.array(values)
