"""Simulated closed-loop learning control with a genetic algorithm.

Each candidate field is applied to a fresh copy of the system prepared in
``rho0`` and scored by measuring a [0, 1]-valued observable. With a finite
number of shots the measured fitness is a binomial frequency.

Every random draw comes from a stream keyed on ``(seed, generation, index)``
so results do not depend on the order in which fitnesses are evaluated.
"""
from __future__ import annotations

from concurrent.futures import Executor
from dataclasses import dataclass, field

import numpy as np

from .dynamics import ControlSystem, PulseSchedule
from .optimal_control import ObjectiveKind, ObjectiveSpec, evaluate_objective

UNLIMITED = None
_BREED = 1 << 30  # stream indices reserved for breeding and initialisation
_INIT = _BREED + 1


@dataclass
class Individual:
    genes: np.ndarray
    fitness: float | None = None

    def copy(self) -> Individual:
        return Individual(self.genes.copy(), self.fitness)


@dataclass(frozen=True)
class LearningConfig:
    """GA settings. ``shots=None`` means noiseless (unlimited) measurement.

    ``encoding`` is ``"raw"`` (genes are the K x M slice values) or
    ``"gaussian"`` (three genes ``(peak, center, width)`` per field, center
    and width in units of the total duration).
    """

    population: int = 40
    generations: int = 200
    elitism: int = 2
    tournament: int = 3
    crossover_rate: float = 0.7
    mutation_sigma: float = 0.2
    shots: int | None = UNLIMITED
    seed: int = 0
    f_max: float = 3.0
    n_slices: int = 10
    dt: float = 0.2
    encoding: str = "raw"

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.generations < 1:
            raise ValueError("generations must be >= 1")
        if not 0 <= self.elitism <= self.population:
            raise ValueError("elitism must lie in [0, population]")
        if self.tournament < 1:
            raise ValueError("tournament size must be >= 1")
        if not 0 <= self.crossover_rate <= 1:
            raise ValueError("crossover_rate must lie in [0, 1]")
        if self.mutation_sigma < 0:
            raise ValueError("mutation_sigma must be non-negative")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be a positive integer or None")
        if not self.f_max > 0:
            raise ValueError("f_max must be positive")
        if self.encoding not in ("raw", "gaussian"):
            raise ValueError(f"unknown encoding {self.encoding!r}")


@dataclass
class FitnessRecord:
    generation: int
    best: float
    mean: float
    worst: float
    best_genes: np.ndarray = field(repr=False)


def stream(seed: int, generation: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(generation, index)))


def n_genes(cfg: LearningConfig, n_controls: int) -> int:
    return cfg.n_slices * n_controls if cfg.encoding == "raw" else 3 * n_controls


def decode(genes: np.ndarray, cfg: LearningConfig, n_controls: int) -> PulseSchedule:
    if cfg.encoding == "raw":
        return PulseSchedule(np.reshape(genes, (cfg.n_slices, n_controls)), cfg.dt)
    total = cfg.n_slices * cfg.dt
    t = cfg.dt * (np.arange(cfg.n_slices) + 0.5)
    cols = []
    for peak, center, width in np.reshape(genes, (n_controls, 3)):
        w = max(abs(width), 1e-3) * total
        cols.append(peak * np.exp(-((t - center * total) ** 2) / (2 * w**2)))
    values = np.clip(np.column_stack(cols), -cfg.f_max, cfg.f_max)
    return PulseSchedule(values, cfg.dt)


def measure_fitness(sys: ControlSystem, individual: Individual, obj: ObjectiveSpec,
                    shots: int | None, rng: np.random.Generator | None,
                    cfg: LearningConfig | None = None) -> float:
    """Run one simulated experiment on a fresh copy and return the measured fitness."""
    if obj.kind is not ObjectiveKind.OBSERVABLE:
        if shots is not None:
            raise ValueError("finite-shot measurement needs an OBSERVABLE objective")
    cfg = cfg or LearningConfig()
    sched = decode(individual.genes, cfg, sys.n_controls)
    p = evaluate_objective(sys, sched, obj).a_term
    if shots is None:
        return p
    if rng is None:
        raise ValueError("finite-shot measurement needs a random generator")
    p = min(1.0, max(0.0, p))
    return rng.binomial(shots, p) / shots


def random_population(n_controls: int, cfg: LearningConfig) -> list[Individual]:
    rng = stream(cfg.seed, 0, _INIT)
    size = n_genes(cfg, n_controls)
    if cfg.encoding == "raw":
        genes = rng.uniform(-cfg.f_max, cfg.f_max, size=(cfg.population, size))
    else:
        g = rng.uniform(0, 1, size=(cfg.population, n_controls, 3))
        g[..., 0] = (2 * g[..., 0] - 1) * cfg.f_max
        g[..., 2] = 0.05 + 0.45 * g[..., 2]
        genes = g.reshape(cfg.population, size)
    return [Individual(row) for row in genes]


def evaluate_population(sys: ControlSystem, pop: list[Individual], obj: ObjectiveSpec,
                        cfg: LearningConfig, generation: int,
                        executor: Executor | None = None) -> None:
    def one(i: int) -> float:
        rng = stream(cfg.seed, generation, i) if cfg.shots is not None else None
        return measure_fitness(sys, pop[i], obj, cfg.shots, rng, cfg)

    idx = range(len(pop))
    scores = list(executor.map(one, idx)) if executor else [one(i) for i in idx]
    for ind, s in zip(pop, scores):
        ind.fitness = s


def _rank(pop: list[Individual]) -> list[Individual]:
    # stable sort keeps ties in population order
    return sorted(pop, key=lambda ind: -ind.fitness)


def _tournament(pop: list[Individual], size: int, rng: np.random.Generator) -> Individual:
    picks = rng.integers(0, len(pop), size=size)
    best = min(picks, key=lambda i: (-pop[i].fitness, i))
    return pop[best]


def next_generation(pop: list[Individual], cfg: LearningConfig, rng: np.random.Generator) -> list[Individual]:
    """Elites, then tournament parents, uniform crossover and Gaussian mutation."""
    if any(ind.fitness is None for ind in pop):
        raise ValueError("every individual needs an evaluated fitness")
    ranked = _rank(pop)
    out = [ind.copy() for ind in ranked[: cfg.elitism]]
    while len(out) < cfg.population:
        a = _tournament(pop, cfg.tournament, rng)
        b = _tournament(pop, cfg.tournament, rng)
        if rng.random() < cfg.crossover_rate:
            mask = rng.random(a.genes.size) < 0.5
            child = np.where(mask, a.genes, b.genes)
        else:
            child = (a if a.fitness >= b.fitness else b).genes.copy()
        if cfg.mutation_sigma > 0:
            child = child + rng.normal(0.0, cfg.mutation_sigma, size=child.size)
        if cfg.encoding == "raw":
            child = np.clip(child, -cfg.f_max, cfg.f_max)
        out.append(Individual(child))
    return out


def run_learning(sys: ControlSystem, obj: ObjectiveSpec, cfg: LearningConfig,
                 initial: list[Individual] | None = None,
                 executor: Executor | None = None) -> tuple[Individual, list[FitnessRecord]]:
    """Evolve ``cfg.generations`` generations; return the best individual and records.

    The best individual is chosen by a noiseless re-evaluation of each
    generation's champion when shots are finite.
    """
    pop = [ind.copy() for ind in initial] if initial is not None else random_population(sys.n_controls, cfg)
    if len(pop) != cfg.population:
        raise ValueError("initial population size differs from config")
    records = []
    best: Individual | None = None
    for gen in range(cfg.generations):
        evaluate_population(sys, pop, obj, cfg, gen, executor)
        scores = np.array([ind.fitness for ind in pop])
        champ = _rank(pop)[0]
        records.append(FitnessRecord(gen, float(scores.max()), float(scores.mean()),
                                     float(scores.min()), champ.genes.copy()))
        true_fit = champ.fitness if cfg.shots is None else measure_fitness(sys, champ, obj, None, None, cfg)
        if best is None or true_fit > best.fitness:
            best = Individual(champ.genes.copy(), true_fit)
        if gen < cfg.generations - 1:
            pop = next_generation(pop, cfg, stream(cfg.seed, gen, _BREED))
    return best, records


def records_equal(a: list[FitnessRecord], b: list[FitnessRecord]) -> bool:
    return len(a) == len(b) and all(
        (x.generation, x.best, x.mean, x.worst) == (y.generation, y.best, y.mean, y.worst)
        and np.array_equal(x.best_genes, y.best_genes)
        for x, y in zip(a, b)
    )
