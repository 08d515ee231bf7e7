"""Evolutionary search over MLP topologies for the audio classifier.

A genome is the ordered list of hidden-layer widths. Search is tournament
selection + one-point crossover + clamped uniform mutation with elitism,
fitness being cross-validated accuracy of the trained network. Every
random draw comes from a generator seeded by (seed, run), and a genome's
fitness is cached and seeded by the genome itself, so results do not
depend on evaluation order.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field

import numpy as np

from .evaluation import MlpClassifier, evaluate, kfold_split
from .network import NetworkModel, TrainConfig, count_connections, mlp, train
from .utils import parallel_map

__all__ = [
    "GenomeBounds",
    "Genome",
    "EvoConfig",
    "FitnessConfig",
    "FitnessRecord",
    "EvolutionResult",
    "random_genome",
    "mutate",
    "crossover",
    "evolve_topology",
    "train_audio_classifier",
]


@dataclass(frozen=True)
class GenomeBounds:
    min_width: int = 8
    max_width: int = 2048
    min_layers: int = 1
    max_layers: int = 5

    def __post_init__(self):
        if self.min_width > self.max_width or self.min_width < 1:
            raise ValueError(f"inverted width bounds [{self.min_width}, {self.max_width}]")
        if self.min_layers > self.max_layers or self.min_layers < 1:
            raise ValueError(f"inverted layer bounds [{self.min_layers}, {self.max_layers}]")


@dataclass(frozen=True)
class Genome:
    hidden_widths: tuple

    def __post_init__(self):
        object.__setattr__(self, "hidden_widths", tuple(int(w) for w in self.hidden_widths))
        if not self.hidden_widths:
            raise ValueError("a genome needs at least one hidden layer")

    def check_bounds(self, bounds: GenomeBounds):
        if not bounds.min_layers <= len(self.hidden_widths) <= bounds.max_layers:
            raise ValueError(f"genome depth {len(self.hidden_widths)} out of bounds")
        for w in self.hidden_widths:
            if not bounds.min_width <= w <= bounds.max_width:
                raise ValueError(f"width {w} outside [{bounds.min_width}, {bounds.max_width}]")
        return self

    def __str__(self):
        return ",".join(str(w) for w in self.hidden_widths)


@dataclass(frozen=True)
class EvoConfig:
    population: int = 20
    generations: int = 10
    runs: int = 5
    mutation_rate: float = 0.3
    crossover_rate: float = 0.7
    elitism: int = 1
    tournament: int = 3
    seed: int = 0
    bounds: GenomeBounds = GenomeBounds()

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be >= 2")
        if self.elitism < 1 or self.elitism > self.population:
            raise ValueError("elitism must be in [1, population]")
        for name in ("mutation_rate", "crossover_rate"):
            rate = getattr(self, name)
            if not 0.0 <= rate <= 1.0:
                raise ValueError(f"{name} must lie in [0, 1]")
        if self.generations < 0 or self.runs < 1:
            raise ValueError("generations must be >= 0 and runs >= 1")


@dataclass(frozen=True)
class FitnessConfig:
    """How a genome is scored: k-fold CV of the trained MLP.

    Every candidate is judged on the same fold plan (fold_seed); the run
    winners are re-scored on a fresh final_folds split.
    """

    folds: int = 3
    final_folds: int = 10
    train_cfg: TrainConfig = field(default_factory=lambda: TrainConfig(epochs=30))
    num_classes: int | None = None
    fold_seed: int = 0


@dataclass(frozen=True)
class FitnessRecord:
    genome: Genome
    accuracy: float
    connections: int


@dataclass
class EvolutionResult:
    best: FitnessRecord
    run_best: list  # per-run winners re-scored at final_folds, search order
    history: list  # rows (run, generation, best_accuracy, mean_accuracy, genome_str, connections)


def _as_rng(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_genome(bounds: GenomeBounds, seed) -> Genome:
    """Uniform random depth and widths within bounds; deterministic per seed."""
    rng = _as_rng(seed)
    depth = int(rng.integers(bounds.min_layers, bounds.max_layers + 1))
    widths = rng.integers(bounds.min_width, bounds.max_width + 1, size=depth)
    return Genome(tuple(widths)).check_bounds(bounds)


def mutate(genome: Genome, cfg: EvoConfig, seed) -> Genome:
    """Per-width uniform perturbation of +-25% of the width range, each with
    probability mutation_rate; with probability 0.1 * mutation_rate a random
    layer is inserted or removed (skipped when at a depth bound)."""
    rng = _as_rng(seed)
    bounds = cfg.bounds
    widths = list(genome.hidden_widths)
    span = bounds.max_width - bounds.min_width
    for i in range(len(widths)):
        if rng.random() < cfg.mutation_rate:
            step = rng.uniform(-0.25, 0.25) * span
            widths[i] = int(np.clip(round(widths[i] + step), bounds.min_width, bounds.max_width))
    if rng.random() < 0.1 * cfg.mutation_rate:
        if rng.random() < 0.5:
            if len(widths) < bounds.max_layers:
                pos = int(rng.integers(0, len(widths) + 1))
                widths.insert(pos, int(rng.integers(bounds.min_width, bounds.max_width + 1)))
        elif len(widths) > bounds.min_layers:
            pos = int(rng.integers(0, len(widths)))
            widths.pop(pos)
    return Genome(tuple(widths)).check_bounds(bounds)


def crossover(a: Genome, b: Genome, seed, bounds: GenomeBounds = GenomeBounds()) -> Genome:
    """One-point crossover on the layer lists: child = a[:p] + b[p:]."""
    rng = _as_rng(seed)
    wa, wb = a.hidden_widths, b.hidden_widths
    p = int(rng.integers(0, max(len(wa), len(wb)) + 1))
    child = list(wa[:p]) + list(wb[p:])
    child = child[: bounds.max_layers]
    if not child:
        child = list(wb[: bounds.max_layers])
    return Genome(tuple(child)).check_bounds(bounds)


def _genome_seed(genome: Genome) -> int:
    """Stable per-genome seed so cached fitness is evaluation-order independent."""
    return zlib.crc32(str(genome).encode())


def _score_genome(genome, features, labels, fit: FitnessConfig, folds, num_classes):
    plan = kfold_split(len(features), folds, seed=fit.fold_seed + folds)
    report = evaluate(
        lambda fold: MlpClassifier(
            list(genome.hidden_widths),
            num_classes,
            fit.train_cfg,
            seed=_genome_seed(genome) + fold,
        ),
        features,
        labels,
        plan,
    )
    return report.mean_accuracy


def _tournament(population, fitness, rng, size):
    contenders = rng.integers(0, len(population), size=size)
    winner = max(contenders, key=lambda i: (fitness[i], -i))
    return population[winner]


def evolve_topology(
    features, labels, evo: EvoConfig, fit: FitnessConfig = FitnessConfig(), threads: int = 1
) -> EvolutionResult:
    """Runs `evo.runs` independent searches and returns the overall winner.

    Per-generation history rows carry the run index, the generation (0 is
    the evaluated initial population), best and mean fitness, the best
    genome, and its connection count. Fitness evaluations within a
    generation may run on a thread pool; each candidate is seeded by its
    own genome, so the thread count never changes results.
    """
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if len(features) == 0:
        raise ValueError("empty dataset")
    num_classes = fit.num_classes or int(labels.max()) + 1
    input_dim = features.shape[1]
    cache = {}

    def score_population(genomes) -> list:
        pending = {}
        for g in genomes:
            if g.hidden_widths not in cache and g.hidden_widths not in pending:
                pending[g.hidden_widths] = g
        fresh = parallel_map(
            lambda g: _score_genome(g, features, labels, fit, fit.folds, num_classes),
            pending.values(),
            threads,
        )
        for key, acc in zip(pending, fresh):
            cache[key] = acc
        return [cache[g.hidden_widths] for g in genomes]

    def score(genome: Genome) -> float:
        return score_population([genome])[0]

    history = []
    run_best = []
    for run in range(evo.runs):
        rng = np.random.default_rng([evo.seed, run])
        population = [random_genome(evo.bounds, rng) for _ in range(evo.population)]
        fitness = score_population(population)
        for generation in range(evo.generations + 1):
            order = sorted(range(len(population)), key=lambda i: (-fitness[i], i))
            best_idx = order[0]
            history.append(
                (
                    run,
                    generation,
                    fitness[best_idx],
                    float(np.mean(fitness)),
                    str(population[best_idx]),
                    count_connections(
                        input_dim, population[best_idx].hidden_widths, num_classes
                    ),
                )
            )
            if generation == evo.generations:
                break
            elites = [population[i] for i in order[: evo.elitism]]
            children = list(elites)
            while len(children) < evo.population:
                parent_a = _tournament(population, fitness, rng, evo.tournament)
                parent_b = _tournament(population, fitness, rng, evo.tournament)
                if rng.random() < evo.crossover_rate:
                    child = crossover(parent_a, parent_b, rng, evo.bounds)
                else:
                    child = parent_a
                children.append(mutate(child, evo, rng))
            population = children
            fitness = score_population(population)
        winner = max(population, key=lambda g: (score(g), tuple(-w for w in g.hidden_widths)))
        final_acc = _score_genome(winner, features, labels, fit, fit.final_folds, num_classes)
        run_best.append(
            FitnessRecord(
                genome=winner,
                accuracy=final_acc,
                connections=count_connections(input_dim, winner.hidden_widths, num_classes),
            )
        )
    best = max(run_best, key=lambda r: r.accuracy)
    return EvolutionResult(best=best, run_best=run_best, history=history)


def train_audio_classifier(
    features, labels, genome: Genome, num_classes: int | None = None,
    train_cfg: TrainConfig = TrainConfig(epochs=100), seed: int = 0,
) -> NetworkModel:
    """Trains the genome's MLP (ReLU hidden, softmax out) on the full set."""
    features = np.asarray(features, dtype=np.float64)
    labels = np.asarray(labels, dtype=int)
    if num_classes is None:
        num_classes = int(labels.max()) + 1
    clf = MlpClassifier(list(genome.hidden_widths), num_classes, train_cfg, seed=seed)
    clf.fit(features, labels)
    return clf.model
