"""Typed hyperparameter search space and the unit-cube genome codec.

Every optimizer works on genomes living in ``[0, 1]^d``.  A
:class:`SearchSpace` turns such a genome into concrete
:class:`HyperParams` only when a candidate is evaluated.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

KINDS = ("integer", "continuous", "log-continuous")

#: Default dropout used when the search space does not expose it.
DEFAULT_DROPOUT = 0.1


class CodecError(ValueError):
    """Genome length does not match the search space."""


class DomainError(ValueError):
    """Gene value outside the unit interval."""


class NumericError(ValueError):
    """Non-finite gene value."""


@dataclass(frozen=True)
class ParamSpec:
    name: str
    kind: str
    low: float
    high: float

    def __post_init__(self):
        if self.kind not in KINDS:
            raise ValueError(f"unknown kind {self.kind!r} for {self.name!r}")
        if not self.low < self.high:
            raise ValueError(f"{self.name}: need low < high, got {self.low} >= {self.high}")
        if self.kind == "log-continuous" and self.low <= 0:
            raise ValueError(f"{self.name}: log-continuous bounds must be positive")

    def decode(self, g: float):
        """Map one gene in [0, 1] to decoded units."""
        lo, hi = self.low, self.high
        if self.kind == "integer":
            # round half up, then clamp
            v = math.floor(lo + g * (hi - lo) + 0.5)
            return int(min(max(v, math.ceil(lo)), math.floor(hi)))
        if self.kind == "continuous":
            return min(max(lo + g * (hi - lo), lo), hi)
        v = 10.0 ** ((1.0 - g) * math.log10(lo) + g * math.log10(hi))
        return min(max(v, lo), hi)

    def contains(self, value) -> bool:
        return self.low <= value <= self.high


@dataclass(frozen=True)
class SearchSpace:
    params: tuple[ParamSpec, ...]
    fixed: Mapping[str, float] = field(default_factory=dict)

    def __post_init__(self):
        object.__setattr__(self, "params", tuple(self.params))
        if not self.params:
            raise ValueError("search space needs at least one parameter")
        names = [p.name for p in self.params]
        if len(set(names)) != len(names):
            raise ValueError(f"duplicate parameter names in {names}")
        object.__setattr__(self, "fixed", dict(self.fixed))

    @property
    def dim(self) -> int:
        return len(self.params)

    @property
    def names(self) -> list[str]:
        return [p.name for p in self.params]

    def __getitem__(self, name: str) -> ParamSpec:
        for p in self.params:
            if p.name == name:
                return p
        raise KeyError(name)

    def to_dict(self) -> dict:
        out = {p.name: {"kind": p.kind, "low": p.low, "high": p.high} for p in self.params}
        for k, v in self.fixed.items():
            out[k] = {"fixed": v}
        return out

    @classmethod
    def from_dict(cls, table: Mapping[str, Mapping]) -> "SearchSpace":
        """Build from the ``[space]`` table of a harness config.

        Each entry is either ``{kind, low, high}`` or ``{fixed = value}``.
        Unknown keys raise ``ValueError``.
        """
        params, fixed = [], {}
        for name, entry in table.items():
            keys = set(entry)
            if keys == {"fixed"}:
                fixed[name] = float(entry["fixed"])
                continue
            if keys != {"kind", "low", "high"}:
                raise ValueError(f"space.{name}: expected keys kind/low/high or fixed, got {sorted(keys)}")
            params.append(ParamSpec(name, entry["kind"], float(entry["low"]), float(entry["high"])))
        return cls(tuple(params), fixed)


@dataclass(frozen=True)
class HyperParams:
    batch_size: int
    epochs: int
    learning_rate: float
    dropout: float = DEFAULT_DROPOUT

    def __post_init__(self):
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be positive")
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be non-negative")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    def as_dict(self) -> dict:
        return {"batch_size": self.batch_size, "epochs": self.epochs,
                "learning_rate": self.learning_rate, "dropout": self.dropout}

    @classmethod
    def parse(cls, text: str) -> "HyperParams":
        """Parse ``B=8,E=50,lr=1e-3,dropout=0.1``."""
        aliases = {"b": "batch_size", "batch_size": "batch_size", "e": "epochs",
                   "epochs": "epochs", "lr": "learning_rate", "eta": "learning_rate",
                   "learning_rate": "learning_rate", "d": "dropout", "dropout": "dropout"}
        kw = {}
        for item in filter(None, (s.strip() for s in text.split(","))):
            key, _, val = item.partition("=")
            try:
                name = aliases[key.strip().lower()]
            except KeyError:
                raise ValueError(f"unknown hyperparameter {key!r}") from None
            kw[name] = float(val)
        missing = {"batch_size", "epochs", "learning_rate"} - set(kw)
        if missing:
            raise ValueError(f"missing hyperparameters: {sorted(missing)}")
        kw["batch_size"] = int(kw["batch_size"])
        kw["epochs"] = int(kw["epochs"])
        return cls(**kw)


@dataclass
class Candidate:
    genes: np.ndarray
    fitness: Optional[float] = None

    def __post_init__(self):
        self.genes = np.asarray(self.genes, dtype=float)
        if np.any(self.genes < 0) or np.any(self.genes > 1):
            raise DomainError("candidate genes must lie in [0, 1]")
        if self.fitness is not None and not math.isfinite(self.fitness):
            raise ValueError("candidate fitness must be finite")


def default_space(tune_dropout: bool = False) -> SearchSpace:
    """Batch size, epochs and learning rate, optionally dropout.

    The envelope covers every optimum reported for the four optimizers
    with margin; dropout is pinned to 0.1 unless ``tune_dropout``.
    """
    params = [
        ParamSpec("batch_size", "integer", 4, 32),
        ParamSpec("epochs", "integer", 50, 500),
        ParamSpec("learning_rate", "log-continuous", 1e-5, 1e-2),
    ]
    if tune_dropout:
        params.append(ParamSpec("dropout", "continuous", 0.0, 0.5))
        return SearchSpace(tuple(params))
    return SearchSpace(tuple(params), {"dropout": DEFAULT_DROPOUT})


def clamp(genes: Iterable[float]) -> np.ndarray:
    """Project genes onto the unit cube."""
    g = np.asarray(genes, dtype=float)
    if not np.all(np.isfinite(g)):
        raise NumericError("cannot clamp non-finite genes")
    return np.clip(g, 0.0, 1.0)


def decode_values(space: SearchSpace, genes: Sequence[float]) -> dict:
    """Decode a genome into a ``{name: value}`` mapping (fixed values included)."""
    g = np.asarray(genes, dtype=float)
    if g.ndim != 1 or g.shape[0] != space.dim:
        raise CodecError(f"expected {space.dim} genes, got shape {g.shape}")
    if not np.all(np.isfinite(g)):
        raise NumericError("non-finite gene")
    if np.any(g < 0.0) or np.any(g > 1.0):
        raise DomainError("genes must lie in [0, 1]; clamp first")
    values = dict(space.fixed)
    for spec, gi in zip(space.params, g):
        values[spec.name] = spec.decode(float(gi))
    return values


def decode(space: SearchSpace, genes: Sequence[float]) -> HyperParams:
    values = decode_values(space, genes)
    try:
        return HyperParams(
            batch_size=int(values["batch_size"]),
            epochs=int(values["epochs"]),
            learning_rate=float(values["learning_rate"]),
            dropout=float(values.get("dropout", DEFAULT_DROPOUT)),
        )
    except KeyError as exc:
        raise CodecError(f"search space does not define {exc.args[0]!r}") from None


def sample_uniform(space: SearchSpace, rng: np.random.Generator) -> Candidate:
    return Candidate(rng.random(space.dim))
