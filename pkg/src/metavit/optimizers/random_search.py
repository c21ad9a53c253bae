from __future__ import annotations

from .base import ConfigError, Evaluator, Objective, OptimizationResult, make_rng


def run_random_search(objective: Objective, space_dim: int, budget: int, seed: int = 0,
                      **evaluator_kw) -> OptimizationResult:
    """Uniform sampling baseline; sample ``i`` is generation ``i``, slot 0.

    Samples come from one stream, so a larger budget with the same seed
    evaluates a superset of the smaller run's points.
    """
    if budget < 1:
        raise ConfigError("random search needs budget >= 1")
    rng = make_rng(seed)
    ev = Evaluator(objective, space_dim, budget, seed, **evaluator_kw)
    for i in range(budget):
        x = rng.random(space_dim)
        fit = ev.evaluate([x], i)
        ev.close_generation(i, fit)
    return ev.result("random")
