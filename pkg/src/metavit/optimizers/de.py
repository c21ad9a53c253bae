"""Differential evolution, DE/rand/1/bin."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ConfigError, Evaluator, Objective, OptimizationResult, make_rng


@dataclass(frozen=True)
class DEConfig:
    pop_size: int = 20
    F: float = 0.8
    CR: float = 0.9
    max_generations: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 4:
            raise ConfigError("DE needs pop_size >= 4 (target plus three distinct donors)")
        if self.F <= 0:
            raise ConfigError("F must be positive")
        if not 0.0 <= self.CR <= 1.0:
            raise ConfigError("CR must lie in [0, 1]")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be positive")


def mutant_vector(a: np.ndarray, b: np.ndarray, c: np.ndarray, F: float) -> np.ndarray:
    return a + F * (b - c)


def binomial_crossover(target: np.ndarray, mutant: np.ndarray, CR: float,
                       rng: np.random.Generator) -> np.ndarray:
    """Take each mutant coordinate with probability CR; one random coordinate always."""
    d = target.shape[0]
    take = rng.random(d) < CR
    take[rng.integers(d)] = True
    return np.where(take, mutant, target)


def pick_donors(n: int, target: int, rng: np.random.Generator) -> tuple[int, int, int]:
    others = np.delete(np.arange(n), target)
    a, b, c = rng.choice(others, size=3, replace=False)
    return int(a), int(b), int(c)


def run_de(objective: Objective, space_dim: int, config: DEConfig = DEConfig(),
           budget: Optional[int] = None, **evaluator_kw) -> OptimizationResult:
    """Minimize ``objective`` with DE/rand/1/bin.

    A generation builds one trial vector per slot from the population as it
    stood at the start of the generation, evaluates the trials, then keeps
    each trial only where it is strictly better than its target.  The
    initial population counts as generation 0 and ``max_generations``
    bounds the number of evaluation rounds including it.
    """
    rng = make_rng(config.seed)
    ev = Evaluator(objective, space_dim, budget, config.seed, **evaluator_kw)
    n = config.pop_size

    pop = rng.random((n, space_dim))
    fit = ev.evaluate(pop, 0)
    if fit.shape[0] < n:
        # budget smaller than one population
        pop, fit = pop[: fit.shape[0]], fit
        ev.close_generation(0, fit)
        return ev.result("de")
    ev.close_generation(0, fit)

    for gen in range(1, config.max_generations):
        if ev.exhausted:
            break
        trials = np.empty_like(pop)
        for i in range(n):
            a, b, c = pick_donors(n, i, rng)
            v = mutant_vector(pop[a], pop[b], pop[c], config.F)
            trials[i] = np.clip(binomial_crossover(pop[i], v, config.CR, rng), 0.0, 1.0)
        trial_fit = ev.evaluate(trials, gen)
        k = trial_fit.shape[0]
        better = trial_fit < fit[:k]
        idx = np.flatnonzero(better)
        pop[idx] = trials[idx]
        fit[idx] = trial_fit[idx]
        ev.close_generation(gen, fit)
    return ev.result("de")
