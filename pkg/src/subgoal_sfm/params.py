"""Model constants, per-pedestrian profiles, and the parameter file format.

Parameter files are flat JSON objects with one key per ModelParams field
plus the pedestrian profile defaults. Unknown keys are rejected, missing
keys fall back to the defaults below.
"""

from __future__ import annotations

import dataclasses
import json
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

DEFAULT_MASS = 70.0            # kg
DEFAULT_RADIUS = 0.25          # m
DEFAULT_MAX_ACCEL = 5.0        # m/s^2
DEFAULT_MAX_SPEED = 3.0        # m/s
DEFAULT_DESIRED_SPEED = 1.3    # m/s


@dataclass
class ModelParams:
    """Tunable constants of the pedestrian model.

    The seven fields touched by calibration are ped_decay_rate,
    veh_decay_rate, veh_lookahead_time, veh_front_buffer, nav_gain,
    nav_directions, and nav_range.
    """

    ped_repulsion_strength: float = 300.0   # N
    ped_decay_rate: float = 3.0             # 1/m
    ped_anisotropy_floor: float = 0.3       # dimensionless, in [0, 1]
    veh_repulsion_strength: float = 1200.0  # N
    veh_decay_rate: float = 2.0             # 1/m
    veh_lookahead_time: float = 2.0         # s, scales speed into front reach
    veh_front_buffer: float = 0.5           # m, fade-out zone past the front line
    obs_repulsion_strength: float = 300.0   # N
    obs_decay_rate: float = 2.0             # 1/m
    nav_gain: float = 240.0                 # kg/s
    nav_softening: float = 0.3              # m, damps target speed near the goal
    nav_directions: int = 80                # even count; fan has this + 1 rays
    nav_angle_step: float = math.pi / 90.0  # rad between adjacent rays
    nav_range: float = 3.0                  # m, waypoint distance when clear
    ped_predict_horizon: float = 1.0        # s, surrounding-pedestrian motion sweep

    def __post_init__(self):
        self.validate()

    def validate(self):
        for name in ("ped_repulsion_strength", "ped_decay_rate",
                     "veh_repulsion_strength", "veh_decay_rate",
                     "obs_repulsion_strength", "obs_decay_rate",
                     "veh_lookahead_time", "veh_front_buffer", "nav_gain",
                     "nav_softening", "nav_angle_step", "nav_range"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        if not 0.0 <= self.ped_anisotropy_floor <= 1.0:
            raise ValueError("ped_anisotropy_floor must be in [0, 1]")
        n = self.nav_directions
        if n < 2 or n % 2 != 0:
            raise ValueError("nav_directions must be an even integer >= 2")
        if self.ped_predict_horizon < 0:
            raise ValueError("ped_predict_horizon must be non-negative")


@dataclass
class PedestrianProfile:
    """Per-pedestrian goal and physical limits."""

    destination: np.ndarray
    desired_speed: float = DEFAULT_DESIRED_SPEED
    mass: float = DEFAULT_MASS
    radius: float = DEFAULT_RADIUS
    max_accel: float = DEFAULT_MAX_ACCEL
    max_speed: float = DEFAULT_MAX_SPEED

    def __post_init__(self):
        self.destination = np.asarray(self.destination, dtype=float)
        if self.destination.shape != (2,):
            raise ValueError("destination must be a 2-vector")
        if self.desired_speed <= 0 or self.desired_speed > self.max_speed:
            raise ValueError("need 0 < desired_speed <= max_speed")
        if self.mass <= 0 or self.radius <= 0 or self.max_accel <= 0:
            raise ValueError("mass, radius, and max_accel must be positive")


PROFILE_DEFAULT_KEYS = {
    "mass": DEFAULT_MASS,
    "radius": DEFAULT_RADIUS,
    "max_accel": DEFAULT_MAX_ACCEL,
    "max_speed": DEFAULT_MAX_SPEED,
    "desired_speed": DEFAULT_DESIRED_SPEED,
}

_MODEL_KEYS = {f.name for f in dataclasses.fields(ModelParams)}


def load_param_file(path) -> tuple[ModelParams, dict]:
    """Read a parameter file; returns (model params, profile defaults)."""
    raw = json.loads(Path(path).read_text())
    if not isinstance(raw, dict):
        raise ValueError(f"{path}: parameter file must be a JSON object")
    unknown = set(raw) - _MODEL_KEYS - set(PROFILE_DEFAULT_KEYS)
    if unknown:
        raise ValueError(f"{path}: unknown parameter keys: {sorted(unknown)}")
    model_kwargs = {k: raw[k] for k in raw if k in _MODEL_KEYS}
    if "nav_directions" in model_kwargs:
        model_kwargs["nav_directions"] = int(model_kwargs["nav_directions"])
    profile = dict(PROFILE_DEFAULT_KEYS)
    profile.update({k: float(raw[k]) for k in raw if k in PROFILE_DEFAULT_KEYS})
    return ModelParams(**model_kwargs), profile


def save_param_file(path, params: ModelParams, profile_defaults: dict | None = None):
    doc = dataclasses.asdict(params)
    doc.update(profile_defaults or PROFILE_DEFAULT_KEYS)
    Path(path).write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def make_profile(destination, desired_speed: float, defaults: dict | None = None) -> PedestrianProfile:
    d = dict(PROFILE_DEFAULT_KEYS)
    if defaults:
        d.update(defaults)
    return PedestrianProfile(
        destination=destination,
        desired_speed=desired_speed,
        mass=d["mass"],
        radius=d["radius"],
        max_accel=d["max_accel"],
        max_speed=d["max_speed"],
    )
