"""Command-line front end.

Subcommands: simulate, scenarios, calibrate, evaluate, plot. Exit codes:
0 success, 1 usage error, 2 data error, 3 numerical failure. The
SGSFM_PARAMS environment variable supplies a default parameter file.
"""

from __future__ import annotations

import argparse
import dataclasses
import hashlib
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import dataio
from .calibration import (GAConfig, ParamVector, fitness, ga_calibrate,
                          group_calibrate, grouped_fitness)
from .dataio import DatasetFormatError, extract_samples, load_dataset
from .evaluation import (ConstantVelocityModel, GroupedSubgoalModel,
                         OrdinarySfmModel, SubgoalModel, evaluate_model,
                         per_sample_aade, threshold_curve)
from .params import ModelParams, PROFILE_DEFAULT_KEYS, load_param_file, save_param_file
from .plotting import plot_simulation, plot_trajectory_file
from .scenarios import (SCENARIO_DESCRIPTIONS, get_fundamental_scenario,
                        load_scenario)
from .simulator import SimulationError, run_process

PARAMS_ENV_VAR = "SGSFM_PARAMS"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_NUMERICAL = 3


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sgsfm", description=__doc__)
    sub = parser.add_subparsers(dest="command")

    p_sim = sub.add_parser("simulate", help="run one scenario")
    p_sim.add_argument("--scenario", required=True,
                       help="fundamental scenario id (fund-01..fund-12) or a scenario JSON file")
    p_sim.add_argument("--n-ped", type=int, default=5,
                       help="pedestrians per flow for fundamental scenarios")
    p_sim.add_argument("--cruise-speed", type=float, default=2.0)
    p_sim.add_argument("--params", default=None, help="parameter file (JSON)")
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.add_argument("--out", default=".", help="output directory")

    p_list = sub.add_parser("scenarios", help="enumerate fundamental scenarios")
    p_list.add_argument("--list", action="store_true")

    p_cal = sub.add_parser("calibrate", help="calibrate parameters on a dataset")
    p_cal.add_argument("--data", required=True, help="canonical CSV file or directory")
    p_cal.add_argument("--mode", choices=["universal", "group"], default="universal")
    p_cal.add_argument("--ga-seed", type=int, default=0)
    p_cal.add_argument("--generations", type=int, default=50)
    p_cal.add_argument("--population", type=int, default=50)
    p_cal.add_argument("--groups", type=int, default=3)
    p_cal.add_argument("--dt", type=float, default=0.5)
    p_cal.add_argument("--params", default=None, help="base parameter file")
    p_cal.add_argument("--workers", type=int, default=1)
    p_cal.add_argument("--out", required=True, help="report JSON path")
    p_cal.add_argument("--params-out", default=None,
                       help="also write the calibrated parameter file here")

    p_eval = sub.add_parser("evaluate", help="score a model on a dataset")
    p_eval.add_argument("--data", required=True)
    p_eval.add_argument("--model", choices=["cv", "sfm", "sgsfm"], required=True)
    p_eval.add_argument("--params", default=None)
    p_eval.add_argument("--k0", type=int, default=10, help="normalizing step count")
    p_eval.add_argument("--dt", type=float, default=0.5)
    p_eval.add_argument("--out", required=True, help="report JSON path")

    p_plot = sub.add_parser("plot", help="render a trajectory file to SVG")
    p_plot.add_argument("--traj", required=True)
    p_plot.add_argument("--out", required=True)

    return parser


def _load_params(path_arg) -> tuple[ModelParams, dict]:
    path = path_arg or os.environ.get(PARAMS_ENV_VAR)
    if path is None:
        return ModelParams(), dict(PROFILE_DEFAULT_KEYS)
    if not Path(path).exists():
        raise DataError(f"parameter file not found: {path}")
    try:
        return load_param_file(path)
    except (ValueError, json.JSONDecodeError) as exc:
        raise DataError(f"bad parameter file: {exc}") from exc


def _require_exists(path, what="input"):
    if not Path(path).exists():
        raise DataError(f"{what} not found: {path}")


def _dataset_digest(data_path) -> dict:
    path = Path(data_path)
    files = sorted(path.glob("*.csv")) if path.is_dir() else [path]
    entries = []
    for f in files:
        entries.append({"file": f.name,
                        "sha256": hashlib.sha256(f.read_bytes()).hexdigest()})
    return {"path": str(path), "files": entries}


def _load_samples(data_path, dt):
    _require_exists(data_path, "data path")
    scenarios = load_dataset(data_path, dt)
    samples = []
    for sc in scenarios:
        samples.extend(extract_samples(sc))
    if not samples:
        raise DataError(f"no data samples found under {data_path}")
    return scenarios, samples


def _theta_dict(theta: ParamVector) -> dict:
    doc = dataclasses.asdict(theta)
    doc["nav_directions_applied"] = theta.apply(ModelParams()).nav_directions
    return doc


def _cmd_simulate(args) -> int:
    params, profile_defaults = _load_params(args.params)
    scenario_ref = args.scenario
    if scenario_ref in SCENARIO_DESCRIPTIONS:
        config = get_fundamental_scenario(scenario_ref, args.n_ped,
                                          args.cruise_speed, args.seed)
    else:
        _require_exists(scenario_ref, "scenario file")
        config = load_scenario(scenario_ref)

    result = run_process(config, params, profile_defaults)

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    traj_path = out_dir / f"{config.scenario_id}_trajectories.csv"
    svg_path = out_dir / f"{config.scenario_id}.svg"
    dataio.write_canonical(traj_path, [dataio.simulation_to_tracks(result)])
    plot_simulation(result, svg_path)

    reached = dataio.fraction_reached(result)
    print(f"{config.scenario_id}: {len(config.pedestrians)} pedestrians, "
          f"{len(config.vehicles)} vehicles, {result.times[-1]:.1f} s simulated")
    print(f"collisions: {int(result.collided.sum())}, "
          f"reached destination (<= 0.5 m): {100.0 * reached:.0f}%")
    print(f"wrote {traj_path}")
    print(f"wrote {svg_path}")
    return EXIT_OK


def _cmd_scenarios(args) -> int:
    for sid, desc in SCENARIO_DESCRIPTIONS.items():
        print(f"{sid}  {desc}")
    return EXIT_OK


def _cmd_calibrate(args) -> int:
    params, profile_defaults = _load_params(args.params)
    _scenarios, samples = _load_samples(args.data, args.dt)
    cfg = GAConfig(population_size=args.population, generations=args.generations,
                   seed=args.ga_seed)

    report = {
        "mode": args.mode,
        "ga_config": dataclasses.asdict(cfg),
        "dataset": _dataset_digest(args.data),
        "n_samples": len(samples),
    }
    if args.mode == "universal":
        result = ga_calibrate(samples, params, cfg,
                              profile_defaults=profile_defaults,
                              workers=args.workers)
        report["theta"] = _theta_dict(result.best)
        report["fitness"] = result.best_fitness
        report["trace"] = result.trace
        best_params = result.best.apply(params)
        print(f"universal calibration: fitness {result.best_fitness:.4f} m "
              f"over {len(samples)} samples")
    else:
        model = group_calibrate(samples, params, cfg, k=args.groups,
                                profile_defaults=profile_defaults,
                                workers=args.workers)
        overall = grouped_fitness(model, samples, params, profile_defaults)
        report["groups"] = [_theta_dict(t) for t in model.group_thetas]
        report["assignments"] = model.assignments.tolist()
        report["group_traces"] = model.group_traces
        report["inertia_curve"] = model.inertia_curve
        report["fitness"] = overall
        best_params = model.group_thetas[0].apply(params)
        counts = np.bincount(model.assignments, minlength=args.groups)
        print(f"group calibration ({args.groups} groups, sizes {counts.tolist()}): "
              f"overall fitness {overall:.4f} m")

    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n")
    print(f"wrote {out}")
    if args.params_out:
        save_param_file(args.params_out, best_params, profile_defaults)
        print(f"wrote {args.params_out}")
    return EXIT_OK


def _cmd_evaluate(args) -> int:
    params, profile_defaults = _load_params(args.params)
    _scenarios, samples = _load_samples(args.data, args.dt)

    if args.model == "cv":
        model = ConstantVelocityModel()
    elif args.model == "sfm":
        model = OrdinarySfmModel()
    else:
        model = SubgoalModel(params)

    scores = evaluate_model(model, samples, norm_steps=args.k0,
                            profile_defaults=profile_defaults)
    errors = per_sample_aade(model, samples, norm_steps=args.k0,
                             profile_defaults=profile_defaults)
    thresholds = np.round(np.arange(0.1, 3.01, 0.1), 2)
    fractions = threshold_curve(errors, thresholds)

    dataset_name = Path(args.data).stem or str(args.data)
    report = {
        "dataset": dataset_name,
        "digest": _dataset_digest(args.data),
        "model": args.model,
        "n_samples": len(samples),
        "k0": args.k0,
        "scores": {"aade": scores.aade, "afde": scores.afde, "ci": scores.ci},
        "threshold_curve": {"thresholds": thresholds.tolist(),
                            "fractions": fractions.tolist()},
    }
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(json.dumps(report, indent=2) + "\n")

    print(f"{'dataset':<12} {'model':<8} {'aADE':>8} {'aFDE':>8} {'CI':>8}")
    print(f"{dataset_name:<12} {args.model:<8} {scores.aade:>8.3f} "
          f"{scores.afde:>8.3f} {scores.ci:>8.3f}")
    print(f"wrote {out}")
    return EXIT_OK


def _cmd_plot(args) -> int:
    _require_exists(args.traj, "trajectory file")
    scenarios = load_dataset(args.traj, 0.5)
    if not scenarios:
        raise DataError(f"no trajectories in {args.traj}")
    plot_trajectory_file(scenarios, args.out)
    print(f"wrote {args.out}")
    return EXIT_OK


_COMMANDS = {
    "simulate": _cmd_simulate,
    "scenarios": _cmd_scenarios,
    "calibrate": _cmd_calibrate,
    "evaluate": _cmd_evaluate,
    "plot": _cmd_plot,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_usage(sys.stderr)
            return EXIT_USAGE
        return _COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    except (DataError, DatasetFormatError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except SimulationError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
