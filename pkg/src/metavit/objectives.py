"""Analytic benchmark functions and the ViT hyperparameter objective.

Benchmarks take unit-cube genes and map them affinely onto their canonical
domain before evaluating, so they plug straight into the optimizers.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .optimizers.base import EvalOutcome
from .searchspace import HyperParams, SearchSpace, decode, default_space

logger = logging.getLogger(__name__)


def sphere(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.dot(x, x))


def rastrigin(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(10.0 * x.size + np.sum(x * x - 10.0 * np.cos(2.0 * np.pi * x)))


def rosenbrock(x) -> float:
    x = np.asarray(x, dtype=float)
    return float(np.sum(100.0 * (x[1:] - x[:-1] ** 2) ** 2 + (1.0 - x[:-1]) ** 2))


@dataclass(frozen=True)
class BenchmarkFn:
    name: str
    dimension: int
    fn: Callable[[np.ndarray], float]
    low: float
    high: float
    known_optimum: float
    optimum_point: float

    @property
    def optimum_location(self) -> np.ndarray:
        return np.full(self.dimension, self.optimum_point)

    def to_domain(self, genes) -> np.ndarray:
        return self.low + np.asarray(genes, dtype=float) * (self.high - self.low)

    def to_genes(self, x) -> np.ndarray:
        return (np.asarray(x, dtype=float) - self.low) / (self.high - self.low)

    def evaluate(self, x) -> float:
        return self.fn(x)

    def __call__(self, genes, eval_seed: int = 0) -> float:
        return self.fn(self.to_domain(genes))


_BENCHMARKS = {
    "sphere": (sphere, -5.0, 5.0, 0.0),
    "rastrigin": (rastrigin, -5.12, 5.12, 0.0),
    "rosenbrock": (rosenbrock, -5.0, 5.0, 1.0),
}

OBJECTIVE_NAMES = tuple(_BENCHMARKS) + ("vit",)


def benchmark(name: str, dim: int) -> BenchmarkFn:
    try:
        fn, lo, hi, opt = _BENCHMARKS[name]
    except KeyError:
        raise ValueError(f"unknown benchmark {name!r}; choose from {sorted(_BENCHMARKS)}") from None
    if dim < 1 or (name == "rosenbrock" and dim < 2):
        raise ValueError(f"invalid dimension {dim} for {name}")
    return BenchmarkFn(name, dim, fn, lo, hi, 0.0, opt)


@dataclass
class ViTObjectiveSpec:
    """Everything besides the hyperparameters that fixes one ViT evaluation.

    ``epoch_cap`` bounds the decoded epoch count; the fitness is
    ``1 - sparse categorical accuracy`` on the validation split.
    """

    config: "ViTConfig"
    train: "Dataset"
    validation: "Dataset"
    epoch_cap: int = 50
    augment: bool = False

    def __post_init__(self):
        if self.epoch_cap < 1:
            raise ValueError("epoch_cap must be >= 1")
        if set(self.train.ids.tolist()) & set(self.validation.ids.tolist()):
            raise ValueError("train and validation splits overlap")


@dataclass
class FitnessResult:
    fitness: float
    diverged: bool
    epochs_run: int
    epochs_requested: int
    history: Optional[object] = field(default=None, repr=False)
    model: Optional[object] = field(default=None, repr=False)


def train_candidate(hp: HyperParams, spec: ViTObjectiveSpec, eval_seed: int) -> FitnessResult:
    """Train a fresh model for ``hp`` and score it on the validation split."""
    from .vit.model import ViTModel
    from .vit.train import predict_logits, train, TrainingDiverged
    from .vit.layers import sparse_categorical_accuracy

    epochs = min(hp.epochs, spec.epoch_cap)
    rng = np.random.default_rng(eval_seed)
    model = ViTModel.initialize(spec.config, rng)
    run_hp = HyperParams(hp.batch_size, epochs, hp.learning_rate, hp.dropout)
    try:
        with np.errstate(over="ignore", invalid="ignore"):
            model, history = train(model, spec.train, run_hp, rng, augment=spec.augment)
    except TrainingDiverged as exc:
        logger.info("training diverged for %s: %s", hp, exc)
        return FitnessResult(1.0, True, exc.epoch, hp.epochs)
    logits = predict_logits(model, spec.validation.images)
    acc = sparse_categorical_accuracy(logits, spec.validation.labels)
    if not np.isfinite(acc):
        return FitnessResult(1.0, True, epochs, hp.epochs)
    return FitnessResult(float(1.0 - acc), False, epochs, hp.epochs, history, model)


def vit_fitness(hp: HyperParams, spec: ViTObjectiveSpec, eval_seed: int) -> float:
    """``1 - validation accuracy`` after training with ``hp``; 1.0 on divergence."""
    return train_candidate(hp, spec, eval_seed).fitness


class ViTObjective:
    """Picklable ``(genes, eval_seed) -> EvalOutcome`` wrapper around :func:`vit_fitness`."""

    def __init__(self, spec: ViTObjectiveSpec, space: Optional[SearchSpace] = None):
        self.spec = spec
        self.space = space if space is not None else default_space()

    @property
    def dim(self) -> int:
        return self.space.dim

    def __call__(self, genes, eval_seed: int) -> EvalOutcome:
        hp = decode(self.space, genes)
        res = train_candidate(hp, self.spec, eval_seed)
        return EvalOutcome(res.fitness, "diverged" if res.diverged else "ok")
