"""SVG rendering of simulation results and trajectory files."""

from __future__ import annotations

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt
import numpy as np
from matplotlib.patches import Polygon

from .geometry import to_world
from .simulator import SimulationResult

_FLOW_CMAP = plt.get_cmap("tab10")


def _vehicle_corners(pose, dims):
    front, rear, half_w = dims
    corners = [(-rear, -half_w), (front, -half_w), (front, half_w), (-rear, half_w)]
    origin = np.array([pose[0], pose[1]])
    return np.array([to_world(np.array(c), origin, pose[2]) for c in corners])


def plot_simulation(result: SimulationResult, path):
    """Trajectory traces colored per flow plus the vehicles' swept stripes."""
    fig, ax = plt.subplots(figsize=(8, 8))

    for j in range(result.veh_poses.shape[1]):
        for k in range(0, result.times.shape[0], 2):
            corners = _vehicle_corners(result.veh_poses[k, j], result.veh_dims[j])
            ax.add_patch(Polygon(corners, closed=True, facecolor="#9db8d2",
                                 edgecolor="none", alpha=0.25))
        corners = _vehicle_corners(result.veh_poses[0, j], result.veh_dims[j])
        ax.add_patch(Polygon(corners, closed=True, facecolor="none",
                             edgecolor="#2b4d6f", linewidth=1.2))

    flows = [p.flow for p in result.config.pedestrians]
    for i in range(result.ped_positions.shape[1]):
        color = _FLOW_CMAP(flows[i] % 10)
        traj = result.ped_positions[:, i]
        ax.plot(traj[:, 0], traj[:, 1], color=color, linewidth=0.9, alpha=0.9)
        ax.plot(traj[0, 0], traj[0, 1], "o", color=color, markersize=3)

    for obstacle in result.config.obstacles:
        v = obstacle.vertices
        if obstacle.closed:
            v = np.vstack([v, v[:1]])
        ax.plot(v[:, 0], v[:, 1], color="black", linewidth=2)

    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.set_title(result.config.scenario_id)
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_trajectory_file(scenarios, path):
    """Render loaded canonical trajectories (one panel, all scenarios)."""
    fig, ax = plt.subplots(figsize=(8, 8))
    for sc in scenarios:
        for track in sc.tracks:
            if track.kind == "vehicle":
                ax.plot(track.positions[:, 0], track.positions[:, 1],
                        color="#2b4d6f", linewidth=2.0, alpha=0.8)
            else:
                ax.plot(track.positions[:, 0], track.positions[:, 1],
                        linewidth=0.9, alpha=0.9)
    ax.set_aspect("equal")
    ax.set_xlabel("x [m]")
    ax.set_ylabel("y [m]")
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)


def plot_threshold_curves(curves: dict[str, tuple[np.ndarray, np.ndarray]], path):
    """Threshold vs fraction-correct curves, one line per model."""
    fig, ax = plt.subplots(figsize=(6, 4))
    for label, (thresholds, fractions) in curves.items():
        ax.plot(thresholds, fractions, label=label)
    ax.set_xlabel("aADE threshold [m]")
    ax.set_ylabel("fraction correctly simulated")
    ax.set_ylim(0, 1.02)
    ax.legend()
    ax.grid(alpha=0.3)
    fig.tight_layout()
    fig.savefig(path, format="svg")
    plt.close(fig)
