"""Parameter search: replay fitness, a real-coded GA, and group calibration.

The seven calibrated parameters form one real-valued gene vector (the
direction count travels as a real gene and is rounded to the nearest even
integer when a candidate is evaluated). Fitness is the mean displacement
between a replayed simulation of each sample's ego pedestrian and the
recorded trajectory, in meters, so lower is better.

Universal calibration runs one GA over all samples. Group calibration
first calibrates every sample on its own with a short GA, clusters those
per-sample vectors with k-means, and then runs one GA per cluster.
"""

from __future__ import annotations

import dataclasses
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from .dataio import DataSample
from .model import pedestrian_model_step
from .params import ModelParams, make_profile
from .states import PedestrianState

GENE_NAMES = ("ped_decay_rate", "veh_decay_rate", "veh_lookahead_time",
              "veh_front_buffer", "nav_gain", "nav_directions", "nav_range")

GENE_BOUNDS = {
    "ped_decay_rate": (0.5, 3.0),
    "veh_decay_rate": (0.5, 3.6),
    "veh_lookahead_time": (2.0, 5.0),
    "veh_front_buffer": (0.5, 1.0),
    "nav_gain": (200.0, 800.0),
    "nav_directions": (80.0, 120.0),
    "nav_range": (3.0, 7.0),
}

_LOWER = np.array([GENE_BOUNDS[n][0] for n in GENE_NAMES])
_UPPER = np.array([GENE_BOUNDS[n][1] for n in GENE_NAMES])


def _round_even(value: float) -> int:
    return int(round(value / 2.0) * 2)


@dataclass
class ParamVector:
    """The seven calibratable parameters as one candidate solution."""

    ped_decay_rate: float
    veh_decay_rate: float
    veh_lookahead_time: float
    veh_front_buffer: float
    nav_gain: float
    nav_directions: float         # real-valued gene, evaluated as even integer
    nav_range: float

    @classmethod
    def from_params(cls, params: ModelParams) -> "ParamVector":
        return cls(*(float(getattr(params, n)) for n in GENE_NAMES))

    @classmethod
    def from_array(cls, arr) -> "ParamVector":
        return cls(*(float(x) for x in arr))

    def to_array(self) -> np.ndarray:
        return np.array([getattr(self, n) for n in GENE_NAMES])

    def clipped(self) -> "ParamVector":
        return ParamVector.from_array(np.clip(self.to_array(), _LOWER, _UPPER))

    def apply(self, base: ModelParams) -> ModelParams:
        """Base params with the seven calibrated fields overridden."""
        n_dirs = _round_even(self.nav_directions)
        n_dirs = min(_round_even(_UPPER[5]), max(_round_even(_LOWER[5]), n_dirs))
        return dataclasses.replace(
            base,
            ped_decay_rate=self.ped_decay_rate,
            veh_decay_rate=self.veh_decay_rate,
            veh_lookahead_time=self.veh_lookahead_time,
            veh_front_buffer=self.veh_front_buffer,
            nav_gain=self.nav_gain,
            nav_directions=n_dirs,
            nav_range=self.nav_range,
        )


@dataclass
class GAConfig:
    population_size: int = 50
    elite_count: int = 4
    tournament_size: int = 3
    crossover_rate: float = 0.7
    mutation_rate: float = 0.2
    mutation_scale: float = 0.1   # std as a fraction of each gene's range
    generations: int = 50
    seed: int = 0

    def __post_init__(self):
        if not self.population_size >= self.elite_count >= 0:
            raise ValueError("need population_size >= elite_count >= 0")
        if self.tournament_size < 1:
            raise ValueError("tournament_size must be >= 1")
        for name in ("crossover_rate", "mutation_rate"):
            if not 0.0 <= getattr(self, name) <= 1.0:
                raise ValueError(f"{name} must be in [0, 1]")
        if self.generations < 0 or self.mutation_scale < 0:
            raise ValueError("generations and mutation_scale must be non-negative")


@dataclass
class CalibrationResult:
    best: ParamVector
    best_fitness: float
    trace: list[float]            # best fitness after each evaluated generation


@dataclass
class GroupModel:
    group_thetas: list[ParamVector]
    assignments: np.ndarray       # (n_samples,) group index per sample
    centroids: np.ndarray         # (k, 7) in standardized feature space
    feature_mean: np.ndarray
    feature_std: np.ndarray
    inertia_curve: list[tuple[int, float]]
    group_traces: list[list[float]]


def replay_sample(step_fn, sample: DataSample, profile) -> np.ndarray:
    """Drive the ego through the sample with ground-truth surroundings."""
    k = sample.step_count
    out = np.empty((k + 1, 2))
    state = PedestrianState(position=sample.ego_positions[0].copy(),
                            velocity=sample.ego_velocities[0].copy())
    out[0] = state.position
    for i in range(k):
        state = step_fn(state, profile, sample.surroundings_at(i), i)
        out[i + 1] = state.position
    return out


def simulate_sample(theta: ParamVector, sample: DataSample, base: ModelParams,
                    profile_defaults: dict | None = None) -> np.ndarray:
    """Simulated ego positions (k+1, 2) under the candidate parameters."""
    params = theta.apply(base)
    profile = make_profile(sample.destination, sample.desired_speed, profile_defaults)

    def step(state, prof, surroundings, _i):
        return pedestrian_model_step(state, prof, surroundings, params, sample.dt)

    return replay_sample(step, sample, profile)


def sample_error(sim_positions: np.ndarray, gt_positions: np.ndarray) -> float:
    """Mean displacement over steps 1..k (the start points coincide)."""
    diff = sim_positions[1:] - gt_positions[1:]
    return float(np.mean(np.hypot(diff[:, 0], diff[:, 1])))


def fitness(theta: ParamVector, samples: list[DataSample], base: ModelParams,
            profile_defaults: dict | None = None) -> float:
    if not samples:
        raise ValueError("fitness needs at least one sample")
    params = theta.apply(base)
    total = 0.0
    for sample in samples:
        profile = make_profile(sample.destination, sample.desired_speed, profile_defaults)

        def step(state, prof, surroundings, _i):
            return pedestrian_model_step(state, prof, surroundings, params, sample.dt)

        sim = replay_sample(step, sample, profile)
        total += sample_error(sim, sample.ego_positions)
    return total / len(samples)


_EVAL_CTX: dict = {}


def _eval_gene(gene: np.ndarray) -> float:
    ctx = _EVAL_CTX
    return fitness(ParamVector.from_array(gene), ctx["samples"], ctx["base"],
                   ctx["profile_defaults"])


def _make_evaluator(samples, base, profile_defaults, workers: int):
    """Returns (evaluate(genes) -> list[float], close()). Order is fixed."""
    _EVAL_CTX.update(samples=samples, base=base, profile_defaults=profile_defaults)
    if workers <= 1:
        return (lambda genes: [_eval_gene(g) for g in genes]), (lambda: None)
    pool = ProcessPoolExecutor(max_workers=workers)
    return (lambda genes: list(pool.map(_eval_gene, genes))), pool.shutdown


def ga_calibrate(samples: list[DataSample], base: ModelParams, cfg: GAConfig,
                 theta0: ParamVector | None = None,
                 profile_defaults: dict | None = None,
                 workers: int = 1) -> CalibrationResult:
    """Elitist GA over the bounded gene box, seeded around theta0.

    The first individual is theta0 itself (the tuned values from `base`
    unless given), the rest are bounded Gaussian perturbations of it.
    Results are deterministic in cfg.seed regardless of worker count.
    """
    if not samples:
        raise ValueError("calibration needs at least one sample")
    rng = np.random.default_rng(cfg.seed)
    span = _UPPER - _LOWER
    sigma = cfg.mutation_scale * span

    seed_gene = (theta0 or ParamVector.from_params(base)).clipped().to_array()
    pop = np.empty((cfg.population_size, len(GENE_NAMES)))
    pop[0] = seed_gene
    for i in range(1, cfg.population_size):
        pop[i] = np.clip(seed_gene + rng.normal(0.0, 1.0, len(GENE_NAMES)) * sigma,
                         _LOWER, _UPPER)

    evaluate, close = _make_evaluator(samples, base, profile_defaults, workers)
    try:
        fits = np.array(evaluate(pop))
        trace = [float(fits.min())]

        def tournament() -> int:
            idx = rng.integers(0, cfg.population_size, size=cfg.tournament_size)
            return int(idx[np.argmin(fits[idx])])

        for _gen in range(cfg.generations):
            order = np.argsort(fits, kind="stable")
            elite_genes = pop[order[:cfg.elite_count]].copy()
            elite_fits = fits[order[:cfg.elite_count]].copy()

            children = np.empty((cfg.population_size - cfg.elite_count, len(GENE_NAMES)))
            for c in range(children.shape[0]):
                a = pop[tournament()]
                b = pop[tournament()]
                if rng.random() < cfg.crossover_rate:
                    mix = rng.random(len(GENE_NAMES))
                    child = mix * a + (1.0 - mix) * b
                else:
                    child = a.copy()
                noise = rng.normal(0.0, 1.0, len(GENE_NAMES)) * sigma
                mutate = rng.random(len(GENE_NAMES)) < cfg.mutation_rate
                child = np.where(mutate, child + noise, child)
                children[c] = np.clip(child, _LOWER, _UPPER)

            child_fits = np.array(evaluate(children)) if children.shape[0] else np.empty(0)
            pop = np.vstack([elite_genes, children])
            fits = np.concatenate([elite_fits, child_fits])
            trace.append(float(fits.min()))
    finally:
        close()

    best_i = int(np.argmin(fits))
    return CalibrationResult(best=ParamVector.from_array(pop[best_i]),
                             best_fitness=float(fits[best_i]), trace=trace)


def individual_features(samples: list[DataSample], base: ModelParams,
                        cfg: GAConfig,
                        profile_defaults: dict | None = None) -> list[ParamVector]:
    """Per-sample calibrated vectors, used as behavior features."""
    features = []
    for i, sample in enumerate(samples):
        sub_cfg = dataclasses.replace(cfg, seed=(cfg.seed + 1) * 1_000_003 + i)
        result = ga_calibrate([sample], base, sub_cfg,
                              profile_defaults=profile_defaults)
        features.append(result.best)
    return features


@dataclass
class ClusterResult:
    labels: np.ndarray
    centroids: np.ndarray         # standardized space
    feature_mean: np.ndarray
    feature_std: np.ndarray
    inertia_curve: list[tuple[int, float]]


def cluster_groups(features: list[ParamVector], k: int, seed: int = 0,
                   elbow_max: int = 8) -> ClusterResult:
    """Standardized k-means over feature vectors, plus an elbow curve."""
    from sklearn.cluster import KMeans

    if k < 1:
        raise ValueError("k must be >= 1")
    if len(features) < k:
        raise ValueError(f"need at least k={k} feature vectors, got {len(features)}")
    arr = np.stack([f.to_array() for f in features])
    mean = arr.mean(axis=0)
    std = arr.std(axis=0)
    std = np.where(std == 0.0, 1.0, std)
    z = (arr - mean) / std

    km = KMeans(n_clusters=k, n_init=10, random_state=seed).fit(z)
    curve = []
    for kk in range(1, min(elbow_max, len(features)) + 1):
        fit = KMeans(n_clusters=kk, n_init=10, random_state=seed).fit(z)
        curve.append((kk, float(fit.inertia_)))
    return ClusterResult(labels=km.labels_.astype(int), centroids=km.cluster_centers_,
                         feature_mean=mean, feature_std=std, inertia_curve=curve)


def group_calibrate(samples: list[DataSample], base: ModelParams, cfg: GAConfig,
                    k: int = 3, feature_cfg: GAConfig | None = None,
                    profile_defaults: dict | None = None,
                    workers: int = 1) -> GroupModel:
    """Individual calibration -> clustering -> one GA per group.

    Group g's GA runs with seed cfg.seed + g, so k = 1 reproduces the
    universal calibration bit for bit. An empty group (possible only in
    degenerate clusterings) inherits the universal optimum.
    """
    if feature_cfg is None:
        feature_cfg = dataclasses.replace(cfg, population_size=16, generations=8,
                                          elite_count=2)
    feats = individual_features(samples, base, feature_cfg, profile_defaults)
    clusters = cluster_groups(feats, k, seed=cfg.seed)

    universal: CalibrationResult | None = None
    thetas: list[ParamVector] = []
    traces: list[list[float]] = []
    for g in range(k):
        subset = [s for s, label in zip(samples, clusters.labels) if label == g]
        if subset:
            result = ga_calibrate(subset, base, dataclasses.replace(cfg, seed=cfg.seed + g),
                                  profile_defaults=profile_defaults, workers=workers)
        else:
            if universal is None:
                universal = ga_calibrate(samples, base, cfg,
                                         profile_defaults=profile_defaults,
                                         workers=workers)
            result = universal
        thetas.append(result.best)
        traces.append(result.trace)

    return GroupModel(group_thetas=thetas, assignments=clusters.labels,
                      centroids=clusters.centroids, feature_mean=clusters.feature_mean,
                      feature_std=clusters.feature_std,
                      inertia_curve=clusters.inertia_curve, group_traces=traces)


def grouped_fitness(model: GroupModel, samples: list[DataSample], base: ModelParams,
                    profile_defaults: dict | None = None) -> float:
    """Mean error over samples, each replayed with its group's parameters."""
    if len(samples) != model.assignments.shape[0]:
        raise ValueError("sample count does not match group assignments")
    total = 0.0
    for sample, g in zip(samples, model.assignments):
        sim = simulate_sample(model.group_thetas[int(g)], sample, base, profile_defaults)
        total += sample_error(sim, sample.ego_positions)
    return total / len(samples)
