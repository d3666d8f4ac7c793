"""Value types describing agents and obstacles."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


def _vec(value) -> np.ndarray:
    v = np.asarray(value, dtype=float)
    if v.shape != (2,):
        raise ValueError(f"expected a 2-vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector components must be finite")
    return v


@dataclass
class PedestrianState:
    position: np.ndarray
    velocity: np.ndarray

    def __post_init__(self):
        self.position = _vec(self.position)
        self.velocity = _vec(self.velocity)

    @property
    def speed(self) -> float:
        return float(np.hypot(self.velocity[0], self.velocity[1]))


@dataclass
class VehicleState:
    position: np.ndarray          # body center, meters
    heading: float                # radians, world frame
    speed: float                  # longitudinal, m/s, >= 0
    center_to_front: float        # meters
    center_to_rear: float         # meters
    half_width: float             # meters

    def __post_init__(self):
        self.position = _vec(self.position)
        self.heading = float(self.heading)
        self.speed = float(self.speed)
        if self.center_to_front <= 0 or self.center_to_rear <= 0 or self.half_width <= 0:
            raise ValueError("vehicle dimensions must be positive")
        if self.speed < 0:
            raise ValueError("vehicle speed must be non-negative")

    def front_reach(self, lookahead_time: float) -> float:
        """Distance from center to the front impact line."""
        return self.center_to_front + lookahead_time * self.speed


@dataclass
class ObstacleShape:
    """Polyline (open) or polygon (closed) obstacle boundary."""

    vertices: np.ndarray          # (k, 2)
    closed: bool = False

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float)
        if v.ndim != 2 or v.shape[1] != 2 or v.shape[0] < 2:
            raise ValueError("obstacle needs at least 2 vertices of shape (k, 2)")
        if np.any(np.all(v[1:] == v[:-1], axis=1)):
            raise ValueError("obstacle has repeated consecutive vertices")
        self.vertices = v

    def edges(self) -> tuple[np.ndarray, np.ndarray]:
        """Edge endpoint arrays (p0, p1), each (m, 2)."""
        v = self.vertices
        if self.closed and v.shape[0] > 2:
            p0 = v
            p1 = np.vstack([v[1:], v[:1]])
        else:
            p0 = v[:-1]
            p1 = v[1:]
        return p0, p1


@dataclass
class Surroundings:
    """Everything an ego pedestrian reacts to, frozen at one time step."""

    pedestrians: list[PedestrianState] = field(default_factory=list)
    vehicles: list[VehicleState] = field(default_factory=list)
    obstacles: list[ObstacleShape] = field(default_factory=list)


@dataclass
class TemporaryDestination:
    """Short-horizon waypoint in ego-local polar form plus its world point."""

    direction: float              # radians
    distance: float               # meters, >= 0
    point: np.ndarray             # resolved world position

    def __post_init__(self):
        if self.distance < 0:
            raise ValueError("waypoint distance must be non-negative")
        self.point = _vec(self.point)
