"""Generational genetic algorithm with roulette-wheel selection,
uniform crossover, Gaussian mutation and elitism."""
from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .base import ConfigError, Evaluator, Objective, OptimizationResult, make_rng


@dataclass(frozen=True)
class GAConfig:
    pop_size: int = 30
    crossover_prob: float = 0.9
    mutation_rate: float = 0.1
    mutation_sigma: float = 0.1
    elitism_count: int = 2
    max_generations: int = 300
    seed: int = 0

    def __post_init__(self):
        if self.pop_size < 2:
            raise ConfigError("GA needs pop_size >= 2")
        if not 0 <= self.crossover_prob <= 1 or not 0 <= self.mutation_rate <= 1:
            raise ConfigError("crossover_prob and mutation_rate must lie in [0, 1]")
        if self.mutation_sigma <= 0:
            raise ConfigError("mutation_sigma must be positive")
        if not 0 <= self.elitism_count < self.pop_size:
            raise ConfigError("elitism_count must satisfy 0 <= elitism_count < pop_size")
        if self.max_generations < 1:
            raise ConfigError("max_generations must be positive")


def selection_weights(fitnesses: Sequence[float]) -> np.ndarray:
    """Turn minimization fitnesses into non-negative roulette weights.

    ``w_i = (f_max - f_i) + delta`` with ``delta = 1e-9 * (f_max - f_min + 1)``
    over the finite fitnesses; non-finite fitnesses get weight 0.
    """
    f = np.asarray(fitnesses, dtype=float)
    finite = np.isfinite(f)
    w = np.zeros_like(f)
    if finite.any():
        fmax, fmin = f[finite].max(), f[finite].min()
        w[finite] = (fmax - f[finite]) + 1e-9 * (fmax - fmin + 1.0)
    return w


def roulette_wheel(weights: Sequence[float], rng: np.random.Generator) -> int:
    """Draw index ``i`` with probability ``weights[i] / sum(weights)``.

    Falls back to a uniform draw (with a ``RuntimeWarning``) when every
    weight is zero.
    """
    w = np.asarray(weights, dtype=float)
    if w.size == 0:
        raise ValueError("cannot select from an empty population")
    if np.any(w < 0) or not np.all(np.isfinite(w)):
        raise ValueError("roulette weights must be finite and non-negative")
    total = w.sum()
    u = rng.random()
    if total <= 0:
        warnings.warn("all roulette weights are zero; selecting uniformly", RuntimeWarning, stacklevel=2)
        return int(min(int(u * w.size), w.size - 1))
    cum = np.cumsum(w)
    return int(min(np.searchsorted(cum, u * cum[-1], side="right"), w.size - 1))


def roulette_select(fitnesses: Sequence[float], rng: np.random.Generator) -> int:
    return roulette_wheel(selection_weights(fitnesses), rng)


def uniform_crossover(p1, p2, rng: np.random.Generator):
    p1 = np.asarray(p1, dtype=float)
    p2 = np.asarray(p2, dtype=float)
    if p1.shape != p2.shape:
        raise ValueError(f"parent shapes differ: {p1.shape} vs {p2.shape}")
    swap = rng.random(p1.shape) < 0.5
    return np.where(swap, p2, p1), np.where(swap, p1, p2)


def gaussian_mutate(genes, pm: float, sigma: float, rng: np.random.Generator) -> np.ndarray:
    g = np.asarray(genes, dtype=float)
    hit = rng.random(g.shape) < pm
    noise = rng.normal(0.0, sigma, g.shape)
    return np.clip(np.where(hit, g + noise, g), 0.0, 1.0)


def run_ga(objective: Objective, space_dim: int, config: GAConfig = GAConfig(),
           budget: Optional[int] = None, **evaluator_kw) -> OptimizationResult:
    """Minimize ``objective`` with a generational GA.

    Elites are carried over unchanged and are not re-evaluated, so each
    generation after the first costs ``pop_size - elitism_count``
    evaluations.
    """
    rng = make_rng(config.seed)
    ev = Evaluator(objective, space_dim, budget, config.seed, **evaluator_kw)
    n, n_elite = config.pop_size, config.elitism_count

    pop = rng.random((n, space_dim))
    fit = ev.evaluate(pop, 0)
    ev.close_generation(0, fit)
    if fit.shape[0] < n:
        return ev.result("ga")

    for gen in range(1, config.max_generations):
        if ev.exhausted:
            break
        order = np.argsort(fit, kind="stable")
        elites = pop[order[:n_elite]]
        elite_fit = fit[order[:n_elite]]
        weights = selection_weights(fit)
        children = []
        while len(children) < n - n_elite:
            p1 = pop[roulette_wheel(weights, rng)]
            p2 = pop[roulette_wheel(weights, rng)]
            if rng.random() < config.crossover_prob:
                c1, c2 = uniform_crossover(p1, p2, rng)
            else:
                c1, c2 = p1.copy(), p2.copy()
            children.append(gaussian_mutate(c1, config.mutation_rate, config.mutation_sigma, rng))
            children.append(gaussian_mutate(c2, config.mutation_rate, config.mutation_sigma, rng))
        children = np.array(children[: n - n_elite])
        child_fit = ev.evaluate(children, gen)
        k = child_fit.shape[0]
        pop = np.vstack([elites, children[:k]])
        fit = np.concatenate([elite_fit, child_fit])
        ev.close_generation(gen, fit)
        if k < n - n_elite:
            break
    return ev.result("ga")
