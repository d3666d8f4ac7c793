"""Collective pedestrian motion under vehicle influence.

Force model, scenario simulator, GA calibration, and trajectory metrics.
"""

from .params import ModelParams, PedestrianProfile
from .states import (ObstacleShape, PedestrianState, Surroundings,
                     TemporaryDestination, VehicleState)

__version__ = "0.1.0"

__all__ = [
    "ModelParams",
    "PedestrianProfile",
    "PedestrianState",
    "VehicleState",
    "ObstacleShape",
    "Surroundings",
    "TemporaryDestination",
    "__version__",
]
