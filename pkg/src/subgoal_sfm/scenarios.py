"""The 12 fundamental interaction scenarios and scenario file round-trip.

Four categories, three scenarios each: pedestrian-only flows, vehicle
front/back interaction, 45-degree crossings, and lateral crossings. The
figure in the source material only sketches these layouts, so the exact
coordinates below are this implementation's reconstruction: flows start
roughly 10 m from the conflict zone and the vehicle start is chosen so
that it reaches the zone at about the same time as the pedestrians.

Flows spawn their pedestrians in rows of up to five abreast (0.8 m apart);
each later row starts half a second's walk further back, which plays the
role of a staggered release without extra scheduling state.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from .simulator import (PedestrianSetup, PurePursuit, Replay, ScenarioConfig,
                        Static, VehicleSetup)
from .states import ObstacleShape, PedestrianState, VehicleState

VEHICLE_FRONT = 2.1     # m, center to front bumper
VEHICLE_REAR = 2.1      # m, center to rear bumper
VEHICLE_HALF_WIDTH = 0.9

_ROW_WIDTH = 5
_ROW_SPACING = 0.8      # m between shoulder positions
_STAGGER = 0.5          # s of walk separating successive rows
_GOAL_SPREAD = 2.0      # destination slots fan out laterally by this factor
_GOAL_ROW_GAP = 1.5     # m between the parking lines of successive rows

SCENARIO_DESCRIPTIONS = {
    "fund-01": "pedestrian-only: two opposing flows",
    "fund-02": "pedestrian-only: two perpendicular crossing flows",
    "fund-03": "pedestrian-only: four flows crossing in the middle",
    "fund-04": "vehicle front: flow walking against the vehicle",
    "fund-05": "vehicle back: flow overtaken from behind",
    "fund-06": "vehicle front/back: opposing flows along the vehicle path",
    "fund-07": "vehicle 45-degree: flow crossing against the vehicle",
    "fund-08": "vehicle 45-degree: flow crossing along the vehicle",
    "fund-09": "vehicle 45-degree: both diagonal flows",
    "fund-10": "vehicle lateral: one flow crossing the vehicle path",
    "fund-11": "vehicle lateral: two flows crossing from both sides",
    "fund-12": "vehicle lateral: two-vehicle convoy with crossing flows",
}

SCENARIO_IDS = tuple(SCENARIO_DESCRIPTIONS)


def _flow(rng, start, direction, walk_length, n, flow_id):
    direction = np.asarray(direction, float)
    direction = direction / math.hypot(direction[0], direction[1])
    lateral = np.array([-direction[1], direction[0]])
    start = np.asarray(start, float)
    setups = []
    for idx in range(n):
        row, col = divmod(idx, _ROW_WIDTH)
        row_count = min(_ROW_WIDTH, n - row * _ROW_WIDTH)
        offset = (col - (row_count - 1) / 2.0) * _ROW_SPACING
        v_d = float(np.clip(rng.normal(1.34, 0.12), 1.0, 1.7))
        back = row * _STAGGER * v_d
        position = start + lateral * offset - direction * back
        # distinct parking slot per pedestrian: rows stop on successive
        # lines and fan out, so nobody's goal sits under a parked agent
        destination = (start + direction * (walk_length - row * _GOAL_ROW_GAP)
                       + lateral * offset * _GOAL_SPREAD)
        setups.append(PedestrianSetup(
            state=PedestrianState(position=position, velocity=np.zeros(2)),
            destination=destination,
            desired_speed=v_d,
            flow=flow_id,
        ))
    return setups


def _vehicle(start_x, cruise_speed, y=0.0):
    state = VehicleState(position=np.array([start_x, y]), heading=0.0,
                         speed=cruise_speed, center_to_front=VEHICLE_FRONT,
                         center_to_rear=VEHICLE_REAR, half_width=VEHICLE_HALF_WIDTH)
    policy = PurePursuit(path=np.array([[start_x, y], [200.0, y]]),
                         cruise_speed=cruise_speed)
    return VehicleSetup(state=state, policy=policy)


def build_fundamental_scenarios(n_ped_per_flow: int, cruise_speed: float = 2.0,
                                seed: int = 0) -> list[ScenarioConfig]:
    """All 12 scenarios, row-major over the 4 x 3 category grid."""
    if n_ped_per_flow < 1:
        raise ValueError("n_ped_per_flow must be >= 1")

    configs = []

    def add(scenario_id, flows, vehicles):
        rng = np.random.default_rng([seed, len(configs)])
        peds = []
        for flow_id, (start, direction, length) in enumerate(flows):
            peds.extend(_flow(rng, start, direction, length, n_ped_per_flow, flow_id))
        configs.append(ScenarioConfig(scenario_id=scenario_id, pedestrians=peds,
                                      vehicles=vehicles, t_end=60.0, dt=0.5,
                                      seed=seed))

    # category 1: pedestrian-only
    add("fund-01", [((-10, 0.0), (1, 0), 20), ((10, 0.4), (-1, 0), 20)], [])
    add("fund-02", [((-10, 0.0), (1, 0), 20), ((0, -10.0), (0, 1), 20)], [])
    add("fund-03", [((-10, 0.0), (1, 0), 20), ((10, 0.5), (-1, 0), 20),
                    ((0.25, -10.0), (0, 1), 20), ((-0.25, 10.0), (0, -1), 20)], [])

    # category 2: vehicle front/back, flows parallel to the vehicle path
    add("fund-04", [((12, 0.0), (-1, 0), 24)], [_vehicle(-16.0, cruise_speed)])
    add("fund-05", [((-4, 0.0), (1, 0), 30)], [_vehicle(-14.0, cruise_speed)])
    add("fund-06", [((12, 0.4), (-1, 0), 24), ((-4, -0.4), (1, 0), 30)],
        [_vehicle(-16.0, cruise_speed)])

    # category 3: 45-degree crossings
    add("fund-07", [((8, -8.0), (-1, 1), 16 * math.sqrt(2.0))],
        [_vehicle(-16.0, cruise_speed)])
    add("fund-08", [((-8, -8.0), (1, 1), 16 * math.sqrt(2.0))],
        [_vehicle(-16.0, cruise_speed)])
    add("fund-09", [((9, -8.0), (-1, 1), 16 * math.sqrt(2.0)),
                    ((-7, -8.0), (1, 1), 16 * math.sqrt(2.0))],
        [_vehicle(-16.0, cruise_speed)])

    # category 4: lateral crossings
    add("fund-10", [((0, -10.0), (0, 1), 20)], [_vehicle(-16.0, cruise_speed)])
    add("fund-11", [((-1, -10.0), (0, 1), 20), ((1, 10.0), (0, -1), 20)],
        [_vehicle(-16.0, cruise_speed)])
    add("fund-12", [((0, -10.0), (0, 1), 20), ((0.8, 10.0), (0, -1), 20)],
        [_vehicle(-12.0, cruise_speed), _vehicle(-26.0, cruise_speed)])

    return configs


def get_fundamental_scenario(scenario_id: str, n_ped_per_flow: int,
                             cruise_speed: float = 2.0, seed: int = 0) -> ScenarioConfig:
    if scenario_id not in SCENARIO_DESCRIPTIONS:
        raise KeyError(f"unknown scenario id: {scenario_id}")
    index = SCENARIO_IDS.index(scenario_id)
    return build_fundamental_scenarios(n_ped_per_flow, cruise_speed, seed)[index]


def _policy_to_dict(policy):
    if isinstance(policy, PurePursuit):
        return {"kind": "pure_pursuit", "path": policy.path.tolist(),
                "cruise_speed": policy.cruise_speed, "lookahead": policy.lookahead,
                "wheelbase": policy.wheelbase}
    if isinstance(policy, Replay):
        return {"kind": "replay", "times": policy.times.tolist(),
                "poses": policy.poses.tolist()}
    if isinstance(policy, Static):
        return {"kind": "static"}
    raise TypeError(f"unknown vehicle policy: {type(policy).__name__}")


def _policy_from_dict(doc):
    kind = doc.get("kind")
    if kind == "pure_pursuit":
        return PurePursuit(path=np.asarray(doc["path"], float),
                           cruise_speed=float(doc["cruise_speed"]),
                           lookahead=float(doc.get("lookahead", 4.0)),
                           wheelbase=float(doc.get("wheelbase", 2.7)))
    if kind == "replay":
        return Replay(times=np.asarray(doc["times"], float),
                      poses=np.asarray(doc["poses"], float))
    if kind == "static":
        return Static()
    raise ValueError(f"unknown policy kind: {kind!r}")


def scenario_to_dict(config: ScenarioConfig) -> dict:
    return {
        "scenario_id": config.scenario_id,
        "t_end": config.t_end,
        "dt": config.dt,
        "seed": config.seed,
        "pedestrians": [
            {"position": p.state.position.tolist(),
             "velocity": p.state.velocity.tolist(),
             "destination": p.destination.tolist(),
             "desired_speed": p.desired_speed,
             "flow": p.flow}
            for p in config.pedestrians
        ],
        "vehicles": [
            {"position": v.state.position.tolist(),
             "heading": v.state.heading,
             "speed": v.state.speed,
             "center_to_front": v.state.center_to_front,
             "center_to_rear": v.state.center_to_rear,
             "half_width": v.state.half_width,
             "policy": _policy_to_dict(v.policy)}
            for v in config.vehicles
        ],
        "obstacles": [
            {"vertices": o.vertices.tolist(), "closed": o.closed}
            for o in config.obstacles
        ],
    }


def scenario_from_dict(doc: dict) -> ScenarioConfig:
    peds = [
        PedestrianSetup(
            state=PedestrianState(position=np.asarray(p["position"], float),
                                  velocity=np.asarray(p["velocity"], float)),
            destination=np.asarray(p["destination"], float),
            desired_speed=float(p["desired_speed"]),
            flow=int(p.get("flow", 0)),
        )
        for p in doc.get("pedestrians", [])
    ]
    vehicles = [
        VehicleSetup(
            state=VehicleState(position=np.asarray(v["position"], float),
                               heading=float(v["heading"]), speed=float(v["speed"]),
                               center_to_front=float(v["center_to_front"]),
                               center_to_rear=float(v["center_to_rear"]),
                               half_width=float(v["half_width"])),
            policy=_policy_from_dict(v["policy"]),
        )
        for v in doc.get("vehicles", [])
    ]
    obstacles = [
        ObstacleShape(vertices=np.asarray(o["vertices"], float),
                      closed=bool(o.get("closed", False)))
        for o in doc.get("obstacles", [])
    ]
    return ScenarioConfig(scenario_id=str(doc["scenario_id"]), pedestrians=peds,
                          vehicles=vehicles, obstacles=obstacles,
                          t_end=float(doc["t_end"]), dt=float(doc["dt"]),
                          seed=int(doc.get("seed", 0)))


def save_scenario(path, config: ScenarioConfig):
    Path(path).write_text(json.dumps(scenario_to_dict(config), indent=2) + "\n")


def load_scenario(path) -> ScenarioConfig:
    return scenario_from_dict(json.loads(Path(path).read_text()))
