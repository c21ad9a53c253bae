"""Campaign configuration file (TOML) and its validation.

Schema (every key not listed is rejected)::

    [campaign]
    algorithms = ["de", "ga", "pso", "aco", "random"]   # or algorithm = "de"
    budget = 60                    # objective evaluations per (algorithm, seed)
    seeds = [1, 2, 3, 4, 5]
    output = "runs/demo"           # optional; --out overrides

    [objective]
    name = "vit"                   # sphere | rastrigin | rosenbrock | vit
    dim = 5                        # benchmarks only
    epoch_cap = 20                 # vit only
    augment = false                # vit only

    [objective.data]               # vit only: generated data ...
    n_samples = 300
    image_size = 16
    difficulty = 0.8
    seed = 0
    # ... or a dataset file instead:  file = "data.svds"

    [objective.model]              # vit only: ViTConfig overrides of the desk preset
    embed_dim = 16

    [space]                        # vit only; defaults to the built-in space
    batch_size = { kind = "integer", low = 4, high = 32 }
    learning_rate = { kind = "log-continuous", low = 1e-5, high = 1e-2 }
    dropout = { fixed = 0.1 }

    [algorithm.de]                 # optional per-algorithm settings
    pop_size = 10
"""
from __future__ import annotations

import dataclasses
import json
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Optional

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from ..objectives import OBJECTIVE_NAMES
from ..optimizers import ALGORITHMS, CONFIG_TYPES, population_size
from ..searchspace import SearchSpace, default_space
from ..vit.model import ViTConfig


class ConfigError(ValueError):
    pass


_CAMPAIGN_KEYS = {"algorithms", "algorithm", "budget", "seeds", "output"}
_OBJECTIVE_KEYS = {"name", "dim", "epoch_cap", "augment", "data", "model"}
_DATA_KEYS = {"n_samples", "image_size", "difficulty", "seed", "file"}
_MODEL_KEYS = {f.name for f in dataclasses.fields(ViTConfig)}
_TOP_KEYS = {"campaign", "objective", "space", "algorithm"}


def _check_keys(table: dict, allowed: set, where: str) -> None:
    unknown = set(table) - allowed
    if unknown:
        raise ConfigError(f"unknown key(s) in [{where}]: {', '.join(sorted(unknown))}")


@dataclass
class DataConfig:
    n_samples: int = 300
    image_size: int = 16
    difficulty: float = 0.8
    seed: int = 0
    file: Optional[str] = None


@dataclass
class ObjectiveConfig:
    name: str = "sphere"
    dim: int = 5
    epoch_cap: int = 50
    augment: bool = False
    data: DataConfig = field(default_factory=DataConfig)
    model: dict = field(default_factory=dict)

    def vit_config(self) -> ViTConfig:
        return ViTConfig.desk(**self.model)


@dataclass
class RunConfig:
    algorithms: list[str]
    objective: ObjectiveConfig
    budget: int
    seeds: list[int]
    space: SearchSpace = field(default_factory=default_space)
    settings: dict[str, dict] = field(default_factory=dict)
    output: Optional[str] = None

    def __post_init__(self):
        self.validate()

    @property
    def dim(self) -> int:
        return self.space.dim if self.objective.name == "vit" else self.objective.dim

    def algorithm_config(self, algorithm: str, seed: int):
        if algorithm == "random":
            return None
        return CONFIG_TYPES[algorithm](**self.settings.get(algorithm, {}), seed=seed)

    def validate(self) -> None:
        if not self.algorithms:
            raise ConfigError("no algorithms configured")
        for alg in self.algorithms:
            if alg not in ALGORITHMS:
                raise ConfigError(f"unknown algorithm {alg!r}; choose from {', '.join(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("duplicate algorithm entries")
        if self.objective.name not in OBJECTIVE_NAMES:
            raise ConfigError(f"unknown objective {self.objective.name!r}; choose from {', '.join(OBJECTIVE_NAMES)}")
        if not self.seeds:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("duplicate seeds")
        if self.budget < 1:
            raise ConfigError("budget must be >= 1")
        if self.objective.name == "vit":
            if self.objective.epoch_cap < 1:
                raise ConfigError("epoch_cap must be >= 1")
            try:
                self.objective.vit_config()
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid [objective.model]: {exc}") from None
        elif self.objective.dim < 1:
            raise ConfigError("objective dim must be >= 1")
        for alg, kw in self.settings.items():
            if alg not in CONFIG_TYPES:
                raise ConfigError(f"[algorithm.{alg}] does not name a configurable algorithm")
            allowed = {f.name for f in dataclasses.fields(CONFIG_TYPES[alg])} - {"seed"}
            _check_keys(kw, allowed, f"algorithm.{alg}")
        for alg in self.algorithms:
            try:
                cfg = self.algorithm_config(alg, 0)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"invalid settings for {alg}: {exc}") from None
            if cfg is not None and self.budget < population_size(alg, cfg):
                raise ConfigError(
                    f"budget {self.budget} is smaller than the {alg} population ({population_size(alg, cfg)})")

    def to_dict(self) -> dict:
        obj = dataclasses.asdict(self.objective)
        return {
            "campaign": {"algorithms": list(self.algorithms), "budget": self.budget,
                         "seeds": list(self.seeds)},
            "objective": obj,
            "space": self.space.to_dict(),
            "algorithm": {k: dict(v) for k, v in self.settings.items()},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def from_dict(doc: dict[str, Any]) -> RunConfig:
    _check_keys(doc, _TOP_KEYS, "top level")
    camp = dict(doc.get("campaign", {}))
    _check_keys(camp, _CAMPAIGN_KEYS, "campaign")
    if "algorithm" in camp and "algorithms" in camp:
        raise ConfigError("give either campaign.algorithm or campaign.algorithms, not both")
    algorithms = camp.get("algorithms", [camp["algorithm"]] if "algorithm" in camp else None)
    if algorithms is None:
        raise ConfigError("campaign.algorithms is required")
    if "budget" not in camp:
        raise ConfigError("campaign.budget is required")

    obj = dict(doc.get("objective", {}))
    _check_keys(obj, _OBJECTIVE_KEYS, "objective")
    if "name" not in obj:
        raise ConfigError("objective.name is required")
    data = dict(obj.pop("data", {}))
    _check_keys(data, _DATA_KEYS, "objective.data")
    model = dict(obj.pop("model", {}))
    _check_keys(model, _MODEL_KEYS, "objective.model")
    try:
        objective = ObjectiveConfig(**obj, data=DataConfig(**data), model=model)
    except TypeError as exc:
        raise ConfigError(str(exc)) from None

    try:
        space = SearchSpace.from_dict(doc["space"]) if "space" in doc else default_space()
    except ValueError as exc:
        raise ConfigError(f"[space]: {exc}") from None

    settings = doc.get("algorithm", {})
    if not isinstance(settings, dict) or not all(isinstance(v, dict) for v in settings.values()):
        raise ConfigError("[algorithm] must contain one table per algorithm")
    return RunConfig(list(algorithms), objective, int(camp["budget"]),
                     [int(s) for s in camp.get("seeds", [0])], space,
                     {k: dict(v) for k, v in settings.items()}, camp.get("output"))


def load_config(path) -> RunConfig:
    try:
        doc = tomllib.loads(Path(path).read_text())
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return from_dict(doc)


def load_snapshot(out_dir) -> RunConfig:
    """Reload the ``config.json`` snapshot written at campaign start."""
    path = Path(out_dir) / "config.json"
    try:
        doc = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"config snapshot {path} missing or corrupt: {exc}") from None
    obj = doc.get("objective", {})
    if isinstance(obj.get("data"), dict) and obj["data"].get("file") is None:
        obj["data"].pop("file", None)
    doc["campaign"]["output"] = str(out_dir)
    if not doc.get("algorithm"):
        doc.pop("algorithm", None)
    return from_dict(doc)
