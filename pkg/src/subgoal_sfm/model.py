"""One time step of the pedestrian model: forces -> waypoint -> motion."""

from __future__ import annotations

import numpy as np

from .forces import (integrate_step, limit_total_force, navigational_force,
                     obstacle_repulsive_force, pedestrian_repulsive_force,
                     vehicle_repulsive_force)
from .params import ModelParams, PedestrianProfile
from .states import PedestrianState, Surroundings
from .subgoal import temporary_destination


def pedestrian_model_step(state: PedestrianState, profile: PedestrianProfile,
                          surroundings: Surroundings, params: ModelParams,
                          dt: float) -> PedestrianState:
    """Advance one pedestrian by dt against frozen surroundings."""
    force = np.zeros(2)
    for veh in surroundings.vehicles:
        force = force + vehicle_repulsive_force(state, veh, params)
    for other in surroundings.pedestrians:
        force = force + pedestrian_repulsive_force(state, other, params, profile.radius)
    for obstacle in surroundings.obstacles:
        force = force + obstacle_repulsive_force(state, obstacle, params, profile.radius)

    waypoint = temporary_destination(state, surroundings, profile.destination,
                                     params, profile.radius)
    force = force + navigational_force(state, waypoint, profile.desired_speed, params)

    force = limit_total_force(force, state.velocity, profile, dt)
    return integrate_step(state, force, profile.mass, dt)
