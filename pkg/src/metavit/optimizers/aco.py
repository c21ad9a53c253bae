"""Ant colony optimization adapted to the unit cube.

Each dimension is split into ``bins_per_dim`` equal bins carrying a
pheromone level.  An ant picks one bin per dimension with probability
proportional to its pheromone and samples a uniform point inside it.
After every iteration all pheromone evaporates by a factor ``1 - rho`` and
the iteration-best ant deposits ``Q / (1 + f_iter_best - f_best_so_far)``
on the bins it used.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ConfigError, Evaluator, Objective, OptimizationResult, make_rng


@dataclass(frozen=True)
class ACOConfig:
    n_ants: int = 20
    bins_per_dim: int = 10
    tau0: float = 1.0
    rho: float = 0.1
    deposit_scale: float = 1.0
    max_iter: int = 300
    tau_min: float = 1e-4
    seed: int = 0

    def __post_init__(self):
        if self.n_ants < 1:
            raise ConfigError("n_ants must be >= 1")
        if self.bins_per_dim < 2:
            raise ConfigError("bins_per_dim must be >= 2")
        if self.tau0 <= 0 or self.deposit_scale <= 0 or self.tau_min <= 0:
            raise ConfigError("tau0, deposit_scale and tau_min must be positive")
        if not 0.0 < self.rho < 1.0:
            raise ConfigError("rho must lie in (0, 1)")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")


def bin_probabilities(tau: np.ndarray) -> np.ndarray:
    return tau / tau.sum(axis=-1, keepdims=True)


def sample_ants(tau: np.ndarray, n_ants: int, rng: np.random.Generator):
    """Return ``(bins, positions)`` for ``n_ants`` ants, both shaped ``(n_ants, d)``."""
    d, k = tau.shape
    cum = np.cumsum(bin_probabilities(tau), axis=1)
    u = rng.random((n_ants, d))
    bins = np.empty((n_ants, d), dtype=np.int64)
    for j in range(d):
        bins[:, j] = np.searchsorted(cum[j], u[:, j] * cum[j, -1], side="right")
    np.minimum(bins, k - 1, out=bins)
    offsets = rng.random((n_ants, d))
    positions = np.clip((bins + offsets) / k, 0.0, 1.0)
    return bins, positions


def evaporate(tau: np.ndarray, rho: float) -> np.ndarray:
    return (1.0 - rho) * tau


def deposit(tau: np.ndarray, bins: np.ndarray, amount: float) -> np.ndarray:
    out = tau.copy()
    out[np.arange(tau.shape[0]), bins] += amount
    return out


def run_aco(objective: Objective, space_dim: int, config: ACOConfig = ACOConfig(),
            budget: Optional[int] = None, **evaluator_kw) -> OptimizationResult:
    rng = make_rng(config.seed)
    ev = Evaluator(objective, space_dim, budget, config.seed, **evaluator_kw)
    tau = np.full((space_dim, config.bins_per_dim), config.tau0)

    for it in range(config.max_iter):
        if ev.exhausted:
            break
        bins, positions = sample_ants(tau, config.n_ants, rng)
        fit = ev.evaluate(positions, it)
        k = fit.shape[0]
        tau = evaporate(tau, config.rho)
        if k and np.isfinite(fit).any():
            ib = int(np.argmin(fit))
            amount = config.deposit_scale / (1.0 + fit[ib] - ev.best_fitness)
            tau = deposit(tau, bins[ib], amount)
        np.maximum(tau, config.tau_min, out=tau)
        ev.close_generation(it, fit)
        if k < config.n_ants:
            break
    result = ev.result("aco")
    result.pheromone = tau
    return result
