"""Shared plumbing for the population-based optimizers.

All algorithms minimize a black-box ``objective(genes, eval_seed)`` over the
unit cube.  :class:`Evaluator` owns the evaluation budget, derives the
per-evaluation seed and reports each finished evaluation to an optional
``on_trial`` hook in deterministic ``(generation, slot)`` order.
"""
from __future__ import annotations

import hashlib
import logging
import math
import struct
import time
from itertools import repeat
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np

logger = logging.getLogger(__name__)

Objective = Callable[[np.ndarray, int], float]


class ConfigError(ValueError):
    """Invalid optimizer configuration."""


class CubeViolation(RuntimeError):
    """A candidate outside ``[0, 1]^d`` reached the objective."""


def derive_seed(run_seed: int, generation: int, slot: int) -> int:
    """Stable 32-bit evaluation seed for ``(run_seed, generation, slot)``.

    BLAKE2b over the three values packed as little-endian signed 64-bit
    integers; the first four digest bytes read as an unsigned integer.
    """
    digest = hashlib.blake2b(struct.pack("<qqq", run_seed, generation, slot), digest_size=8).digest()
    return int.from_bytes(digest[:4], "little")


@dataclass(frozen=True)
class EvalOutcome:
    """Objective return value carrying a status flag next to the fitness."""

    fitness: float
    status: str = "ok"


@dataclass(frozen=True)
class Trial:
    generation: int
    slot: int
    genes: np.ndarray
    fitness: float
    status: str
    eval_seed: int
    wall_time: float


@dataclass(frozen=True)
class GenerationStats:
    generation: int
    best: float
    mean: float
    evaluations: int


@dataclass
class OptimizationResult:
    algorithm: str
    best_genes: np.ndarray
    best_fitness: float
    history: list[GenerationStats] = field(default_factory=list)
    evaluations_used: int = 0
    failures: int = 0

    @property
    def best_curve(self) -> np.ndarray:
        return np.array([h.best for h in self.history])


class Evaluator:
    """Budgeted, seeded, order-preserving objective dispatcher.

    Parameters
    ----------
    objective : callable
        ``objective(genes, eval_seed)`` returning a float or an
        :class:`EvalOutcome`.
    dim : int
        Genome length.
    budget : int or None
        Maximum number of objective calls; ``None`` means unbounded.
    seed : int
        Run seed used to derive evaluation seeds.
    on_trial : callable, optional
        Called with each :class:`Trial` in slot order.
    callback : callable, optional
        Called with each :class:`GenerationStats` as generations close.
    executor : concurrent.futures.Executor, optional
        Evaluations of one batch are dispatched through ``executor.map``.
    """

    def __init__(self, objective: Objective, dim: int, budget: Optional[int] = None, seed: int = 0,
                 on_trial: Optional[Callable[[Trial], None]] = None,
                 callback: Optional[Callable[[GenerationStats], None]] = None,
                 executor=None):
        if budget is not None and budget < 1:
            raise ConfigError("budget must be >= 1")
        self.objective = objective
        self.dim = dim
        self.budget = budget
        self.seed = seed
        self.on_trial = on_trial
        self.callback = callback
        self.executor = executor
        self.used = 0
        self.failures = 0
        self.best_fitness = math.inf
        self.best_genes: Optional[np.ndarray] = None
        self.history: list[GenerationStats] = []

    @property
    def remaining(self) -> int:
        if self.budget is None:
            return 1 << 62
        return self.budget - self.used

    @property
    def exhausted(self) -> bool:
        return self.remaining <= 0

    def evaluate(self, population: Sequence[np.ndarray], generation: int) -> np.ndarray:
        """Evaluate up to ``remaining`` genomes, in slot order.

        Returns one fitness per evaluated genome; the array is shorter than
        ``population`` when the budget runs out.  Non-finite fitnesses are
        recorded as failures and returned as ``+inf``.
        """
        pop = [np.asarray(g, dtype=float) for g in population][: max(self.remaining, 0)]
        for g in pop:
            if g.shape != (self.dim,):
                raise ValueError(f"genome shape {g.shape} != ({self.dim},)")
            if not (np.all(g >= 0.0) and np.all(g <= 1.0)):
                raise CubeViolation(f"genes outside unit cube: {g}")
        seeds = [derive_seed(self.seed, generation, slot) for slot in range(len(pop))]
        if self.executor is not None and len(pop) > 1:
            results = list(self.executor.map(_timed_call, repeat(self.objective), pop, seeds))
        else:
            results = [_timed_call(self.objective, g, s) for g, s in zip(pop, seeds)]

        fitness = np.empty(len(pop))
        for slot, (g, s, (out, wall)) in enumerate(zip(pop, seeds, results)):
            if isinstance(out, EvalOutcome):
                value, status = float(out.fitness), out.status
            else:
                value, status = float(out), "ok"
            if not math.isfinite(value):
                status = "failed"
                self.failures += 1
                value = math.inf
            self.used += 1
            fitness[slot] = value
            if value < self.best_fitness:
                self.best_fitness = value
                self.best_genes = g.copy()
            if self.on_trial is not None:
                self.on_trial(Trial(generation, slot, g.copy(), value if status != "failed" else math.nan,
                                    status, s, wall))
        return fitness

    def close_generation(self, generation: int, population_fitness: np.ndarray) -> None:
        finite = population_fitness[np.isfinite(population_fitness)]
        mean = float(finite.mean()) if finite.size else math.inf
        stats = GenerationStats(generation, self.best_fitness, mean, self.used)
        self.history.append(stats)
        if self.callback is not None:
            self.callback(stats)

    def result(self, algorithm: str) -> OptimizationResult:
        best = self.best_genes if self.best_genes is not None else np.full(self.dim, np.nan)
        return OptimizationResult(algorithm, best, self.best_fitness, list(self.history),
                                  self.used, self.failures)


def _timed_call(objective: Objective, genes: np.ndarray, eval_seed: int):
    t0 = time.perf_counter()
    try:
        out = objective(genes, eval_seed)
    except (ArithmeticError, FloatingPointError) as exc:
        logger.warning("objective raised %r; recording as failure", exc)
        out = EvalOutcome(math.nan, "failed")
    return out, time.perf_counter() - t0


def make_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(seed)
