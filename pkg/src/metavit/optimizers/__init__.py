"""Population-based minimizers over the unit cube."""
from .aco import ACOConfig, run_aco
from .base import (ConfigError, CubeViolation, EvalOutcome, Evaluator, GenerationStats,
                   OptimizationResult, Trial, derive_seed)
from .de import DEConfig, run_de
from .ga import GAConfig, gaussian_mutate, roulette_select, roulette_wheel, run_ga, uniform_crossover
from .pso import PSOConfig, run_pso
from .random_search import run_random_search

ALGORITHMS = ("de", "ga", "pso", "aco", "random")

CONFIG_TYPES = {"de": DEConfig, "ga": GAConfig, "pso": PSOConfig, "aco": ACOConfig}


def population_size(algorithm: str, config) -> int:
    """Evaluations needed for one full first generation."""
    if algorithm == "random":
        return 1
    field = {"de": "pop_size", "ga": "pop_size", "pso": "swarm_size", "aco": "n_ants"}[algorithm]
    return getattr(config, field)


def run(algorithm: str, objective, dim: int, config=None, budget=None, seed: int = 0, **evaluator_kw):
    """Dispatch by algorithm name; ``config`` defaults to the algorithm's defaults with ``seed``."""
    if algorithm == "random":
        if budget is None:
            raise ConfigError("random search needs a budget")
        return run_random_search(objective, dim, budget, seed, **evaluator_kw)
    try:
        cls = CONFIG_TYPES[algorithm]
    except KeyError:
        raise ConfigError(f"unknown algorithm {algorithm!r}") from None
    if config is None:
        config = cls(seed=seed)
    runner = {"de": run_de, "ga": run_ga, "pso": run_pso, "aco": run_aco}[algorithm]
    return runner(objective, dim, config, budget=budget, **evaluator_kw)
