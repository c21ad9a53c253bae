"""Global-best particle swarm optimization in the unit cube."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .base import ConfigError, Evaluator, Objective, OptimizationResult, make_rng


@dataclass(frozen=True)
class PSOConfig:
    swarm_size: int = 20
    w: float = 0.729
    c1: float = 1.49445
    c2: float = 1.49445
    v_max: float = 0.5
    max_iter: int = 200
    seed: int = 0

    def __post_init__(self):
        if self.swarm_size < 1:
            raise ConfigError("swarm_size must be >= 1")
        if min(self.w, self.c1, self.c2) < 0:
            raise ConfigError("w, c1 and c2 must be non-negative")
        if self.v_max <= 0:
            raise ConfigError("v_max must be positive")
        if self.max_iter < 1:
            raise ConfigError("max_iter must be positive")


def update_velocity(velocity, position, pbest, gbest, w, c1, c2, r1, r2, v_max):
    """Inertia + cognitive + social pull, clamped to ``[-v_max, v_max]``.

    ``r1`` and ``r2`` are the uniform draws, one per particle and dimension.
    """
    v = w * velocity + c1 * r1 * (pbest - position) + c2 * r2 * (gbest - position)
    return np.clip(v, -v_max, v_max)


def run_pso(objective: Objective, space_dim: int, config: PSOConfig = PSOConfig(),
            budget: Optional[int] = None, **evaluator_kw) -> OptimizationResult:
    rng = make_rng(config.seed)
    ev = Evaluator(objective, space_dim, budget, config.seed, **evaluator_kw)
    n = config.swarm_size

    pos = rng.random((n, space_dim))
    vel = rng.uniform(-config.v_max, config.v_max, (n, space_dim))
    pbest = pos.copy()
    pbest_fit = np.full(n, np.inf)

    for it in range(config.max_iter):
        if ev.exhausted:
            break
        fit = ev.evaluate(pos, it)
        k = fit.shape[0]
        improved = np.flatnonzero(fit < pbest_fit[:k])
        pbest[improved] = pos[improved]
        pbest_fit[improved] = fit[improved]
        ev.close_generation(it, fit)
        if k < n:
            break
        gbest = pbest[np.argmin(pbest_fit)]
        r1 = rng.random((n, space_dim))
        r2 = rng.random((n, space_dim))
        vel = update_velocity(vel, pos, pbest, gbest, config.w, config.c1, config.c2, r1, r2, config.v_max)
        pos = np.clip(pos + vel, 0.0, 1.0)
    return ev.result("pso")
