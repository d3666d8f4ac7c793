"""Canonical trajectory format, resampling, and data-sample extraction.

The canonical format is a UTF-8 CSV with a header row and the columns

    scenario_id,time_s,agent_id,kind,x_m,y_m,heading_rad,length_m,width_m

where kind is "pedestrian" or "vehicle" and the last three fields are
empty for pedestrians. Times are seconds, positions meters. Converters
from dataset-native layouts are expected to target this format.
"""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .states import PedestrianState, Surroundings, VehicleState

HEADER = ["scenario_id", "time_s", "agent_id", "kind",
          "x_m", "y_m", "heading_rad", "length_m", "width_m"]

KIND_PEDESTRIAN = "pedestrian"
KIND_VEHICLE = "vehicle"


@dataclass
class TrajectoryRecord:
    """One raw row of the canonical format."""

    scenario_id: str
    time: float
    agent_id: str
    kind: str
    position: np.ndarray
    heading: float | None = None
    length: float | None = None
    width: float | None = None


@dataclass
class AgentTrack:
    """One agent resampled onto the shared time grid."""

    agent_id: str
    kind: str
    start_index: int              # grid index of the first sample
    positions: np.ndarray         # (k, 2)
    headings: np.ndarray | None   # (k,) vehicles only
    length: float | None = None
    width: float | None = None

    @property
    def end_index(self) -> int:
        return self.start_index + self.positions.shape[0] - 1

    def velocities(self, dt: float) -> np.ndarray:
        """Forward-difference velocities; the last step repeats the previous."""
        p = self.positions
        if p.shape[0] < 2:
            return np.zeros_like(p)
        v = np.empty_like(p)
        v[:-1] = (p[1:] - p[:-1]) / dt
        v[-1] = v[-2]
        return v


@dataclass
class TrajectoryScenario:
    scenario_id: str
    dt: float
    tracks: list[AgentTrack]

    def pedestrians(self) -> list[AgentTrack]:
        return [t for t in self.tracks if t.kind == KIND_PEDESTRIAN]

    def vehicles(self) -> list[AgentTrack]:
        return [t for t in self.tracks if t.kind == KIND_VEHICLE]


@dataclass
class DataSample:
    """One ego pedestrian's ground truth plus replayable surroundings.

    Surrounding arrays are aligned to the ego's steps and NaN-padded where
    an agent is absent.
    """

    scenario_id: str
    ego_id: str
    dt: float
    ego_positions: np.ndarray     # (k+1, 2)
    ego_velocities: np.ndarray    # (k+1, 2)
    destination: np.ndarray       # (2,)
    desired_speed: float
    ped_positions: np.ndarray     # (k+1, n_p, 2)
    ped_velocities: np.ndarray    # (k+1, n_p, 2)
    veh_poses: np.ndarray         # (k+1, n_v, 3) x, y, heading
    veh_speeds: np.ndarray        # (k+1, n_v)
    veh_dims: np.ndarray          # (n_v, 3) front, rear, half_width

    @property
    def step_count(self) -> int:
        """k: the number of simulated transitions."""
        return self.ego_positions.shape[0] - 1

    def surroundings_at(self, step: int) -> Surroundings:
        """Frozen surroundings for one step; memoized, treat as read-only."""
        cache = self.__dict__.get("_surroundings_cache")
        if cache is None:
            cache = [self._build_surroundings(i)
                     for i in range(self.ego_positions.shape[0])]
            self.__dict__["_surroundings_cache"] = cache
        return cache[step]

    def _build_surroundings(self, step: int) -> Surroundings:
        peds = []
        for j in range(self.ped_positions.shape[1]):
            pos = self.ped_positions[step, j]
            if np.isfinite(pos[0]):
                peds.append(PedestrianState(position=pos.copy(),
                                            velocity=self.ped_velocities[step, j].copy()))
        vehicles = []
        for j in range(self.veh_poses.shape[1]):
            pose = self.veh_poses[step, j]
            if np.isfinite(pose[0]):
                vehicles.append(VehicleState(
                    position=pose[:2].copy(), heading=float(pose[2]),
                    speed=max(0.0, float(self.veh_speeds[step, j])),
                    center_to_front=float(self.veh_dims[j, 0]),
                    center_to_rear=float(self.veh_dims[j, 1]),
                    half_width=float(self.veh_dims[j, 2])))
        return Surroundings(pedestrians=peds, vehicles=vehicles)


class DatasetFormatError(ValueError):
    """Malformed canonical-format input."""


def _parse_rows(path: Path) -> list[TrajectoryRecord]:
    records = []
    with open(path, newline="", encoding="utf-8") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            return records
        if [h.strip() for h in header] != HEADER:
            raise DatasetFormatError(
                f"{path}: expected header {','.join(HEADER)}")
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            if len(row) != len(HEADER):
                raise DatasetFormatError(
                    f"{path}:{line_no}: expected {len(HEADER)} fields, got {len(row)}")
            try:
                kind = row[3].strip()
                if kind not in (KIND_PEDESTRIAN, KIND_VEHICLE):
                    raise ValueError(f"unknown agent kind {kind!r}")
                time = float(row[1])
                position = np.array([float(row[4]), float(row[5])])
                heading = length = width = None
                if kind == KIND_VEHICLE:
                    heading = float(row[6])
                    length = float(row[7])
                    width = float(row[8])
                    if length <= 0 or width <= 0:
                        raise ValueError("vehicle length/width must be positive")
                if not math.isfinite(time) or not np.all(np.isfinite(position)):
                    raise ValueError("non-finite time or position")
            except ValueError as exc:
                raise DatasetFormatError(f"{path}:{line_no}: {exc}") from exc
            records.append(TrajectoryRecord(
                scenario_id=row[0].strip(), time=time, agent_id=row[2].strip(),
                kind=kind, position=position, heading=heading,
                length=length, width=width))
    return records


def _resample_track(records: list[TrajectoryRecord], dt: float) -> AgentTrack | None:
    records = sorted(records, key=lambda r: r.time)
    times = np.array([r.time for r in records])
    xs = np.array([r.position[0] for r in records])
    ys = np.array([r.position[1] for r in records])

    i0 = int(math.ceil(times[0] / dt - 1e-9))
    i1 = int(math.floor(times[-1] / dt + 1e-9))
    if i1 < i0:
        return None
    grid = np.arange(i0, i1 + 1) * dt
    positions = np.stack([np.interp(grid, times, xs), np.interp(grid, times, ys)], axis=1)

    headings = None
    first = records[0]
    if first.kind == KIND_VEHICLE:
        raw = np.unwrap(np.array([r.heading for r in records]))
        headings = np.interp(grid, times, raw)
    return AgentTrack(agent_id=first.agent_id, kind=first.kind, start_index=i0,
                      positions=positions, headings=headings,
                      length=first.length, width=first.width)


def load_dataset(path, dt: float) -> list[TrajectoryScenario]:
    """Load canonical-format file(s) and resample all tracks onto the dt grid."""
    path = Path(path)
    if path.is_dir():
        files = sorted(path.glob("*.csv"))
    else:
        files = [path]

    records = []
    for f in files:
        records.extend(_parse_rows(f))
    if not records:
        return []

    by_scenario: dict[str, dict[str, list[TrajectoryRecord]]] = {}
    order: list[str] = []
    for rec in records:
        if rec.scenario_id not in by_scenario:
            by_scenario[rec.scenario_id] = {}
            order.append(rec.scenario_id)
        by_scenario[rec.scenario_id].setdefault(rec.agent_id, []).append(rec)

    scenarios = []
    for sid in order:
        tracks = []
        for agent_id in by_scenario[sid]:
            track = _resample_track(by_scenario[sid][agent_id], dt)
            if track is not None:
                tracks.append(track)
        scenarios.append(TrajectoryScenario(scenario_id=sid, dt=dt, tracks=tracks))
    return scenarios


def write_canonical(path, scenarios: list[TrajectoryScenario]):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(HEADER)
        for sc in scenarios:
            for track in sc.tracks:
                for i in range(track.positions.shape[0]):
                    t = (track.start_index + i) * sc.dt
                    if track.kind == KIND_VEHICLE:
                        extra = [f"{track.headings[i]:.10g}",
                                 f"{track.length:.10g}", f"{track.width:.10g}"]
                    else:
                        extra = ["", "", ""]
                    writer.writerow([sc.scenario_id, f"{t:.10g}", track.agent_id,
                                     track.kind,
                                     f"{track.positions[i, 0]:.10g}",
                                     f"{track.positions[i, 1]:.10g}", *extra])


def simulation_to_tracks(result) -> TrajectoryScenario:
    """Convert a SimulationResult into canonical-format tracks."""
    tracks = []
    for i in range(result.ped_positions.shape[1]):
        tracks.append(AgentTrack(agent_id=f"ped-{i:03d}", kind=KIND_PEDESTRIAN,
                                 start_index=0,
                                 positions=result.ped_positions[:, i].copy(),
                                 headings=None))
    for j in range(result.veh_poses.shape[1]):
        dims = result.veh_dims[j]
        tracks.append(AgentTrack(agent_id=f"veh-{j:03d}", kind=KIND_VEHICLE,
                                 start_index=0,
                                 positions=result.veh_poses[:, j, :2].copy(),
                                 headings=result.veh_poses[:, j, 2].copy(),
                                 length=float(dims[0] + dims[1]),
                                 width=float(2.0 * dims[2])))
    return TrajectoryScenario(scenario_id=result.config.scenario_id,
                              dt=result.config.dt, tracks=tracks)


def fraction_reached(result, tolerance: float = 0.5) -> float:
    """Share of pedestrians that ever came within tolerance of their goal."""
    n = result.ped_positions.shape[1]
    if n == 0:
        return 1.0
    reached = 0
    for i, setup in enumerate(result.config.pedestrians):
        gaps = result.ped_positions[:, i] - setup.destination[None, :]
        if np.min(np.hypot(gaps[:, 0], gaps[:, 1])) <= tolerance:
            reached += 1
    return reached / n


def estimate_destination(positions: np.ndarray, extend_length: float = 5.0) -> np.ndarray:
    """Goal point: last position pushed extend_length along the net direction."""
    p0 = positions[0]
    pk = positions[-1]
    d = pk - p0
    n = math.hypot(d[0], d[1])
    if n == 0.0:
        raise ValueError("stationary ego: first and last positions coincide")
    return pk + (extend_length / n) * d


def estimate_desired_speed(positions: np.ndarray, dt: float,
                           walking_threshold: float = 0.8,
                           fallback: float = 1.3) -> float:
    """Mean of per-step speeds above the walking threshold."""
    steps = positions[1:] - positions[:-1]
    speeds = np.hypot(steps[:, 0], steps[:, 1]) / dt
    walking = speeds[speeds > walking_threshold]
    if walking.size == 0:
        return fallback
    return float(np.mean(walking))


def extract_samples(scenario: TrajectoryScenario) -> list[DataSample]:
    """One sample per pedestrian, spanning that pedestrian's full presence."""
    samples = []
    for ego in scenario.pedestrians():
        if ego.positions.shape[0] < 2:
            warnings.warn(f"{scenario.scenario_id}/{ego.agent_id}: present fewer "
                          "than 2 steps, skipped")
            continue
        k1 = ego.positions.shape[0]
        lo, hi = ego.start_index, ego.end_index

        others = [t for t in scenario.pedestrians() if t is not ego]
        ped_pos = np.full((k1, len(others), 2), np.nan)
        ped_vel = np.full((k1, len(others), 2), np.nan)
        for j, track in enumerate(others):
            a = max(lo, track.start_index)
            b = min(hi, track.end_index)
            if b < a:
                continue
            src = slice(a - track.start_index, b - track.start_index + 1)
            dst = slice(a - lo, b - lo + 1)
            ped_pos[dst, j] = track.positions[src]
            ped_vel[dst, j] = track.velocities(scenario.dt)[src]

        vehicles = scenario.vehicles()
        veh_poses = np.full((k1, len(vehicles), 3), np.nan)
        veh_speeds = np.full((k1, len(vehicles)), np.nan)
        veh_dims = np.zeros((len(vehicles), 3))
        for j, track in enumerate(vehicles):
            veh_dims[j] = (track.length / 2.0, track.length / 2.0, track.width / 2.0)
            a = max(lo, track.start_index)
            b = min(hi, track.end_index)
            if b < a:
                continue
            src = slice(a - track.start_index, b - track.start_index + 1)
            dst = slice(a - lo, b - lo + 1)
            veh_poses[dst, j, :2] = track.positions[src]
            veh_poses[dst, j, 2] = track.headings[src]
            vel = track.velocities(scenario.dt)[src]
            veh_speeds[dst, j] = np.hypot(vel[:, 0], vel[:, 1])

        samples.append(DataSample(
            scenario_id=scenario.scenario_id, ego_id=ego.agent_id, dt=scenario.dt,
            ego_positions=ego.positions.copy(),
            ego_velocities=ego.velocities(scenario.dt),
            destination=estimate_destination(ego.positions),
            desired_speed=estimate_desired_speed(ego.positions, scenario.dt),
            ped_positions=ped_pos, ped_velocities=ped_vel,
            veh_poses=veh_poses, veh_speeds=veh_speeds, veh_dims=veh_dims))
    return samples
