import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from metavit.searchspace import (CodecError, DomainError, HyperParams, NumericError, ParamSpec, SearchSpace,
                                 Candidate, clamp, decode, decode_values, default_space, sample_uniform)

SPACE = default_space()
genes3 = st.lists(st.floats(-2.0, 3.0, allow_nan=False), min_size=3, max_size=3)


def test_log_lower_bound():
    assert ParamSpec("lr", "log-continuous", 1e-5, 1e-2).decode(0.0) == pytest.approx(1e-5, rel=1e-15)


def test_integer_upper_bound():
    assert ParamSpec("B", "integer", 4, 32).decode(1.0) == 32


def test_log_midpoint_against_formula():
    expected = 10 ** (0.5 * math.log10(1e-5) + 0.5 * math.log10(1e-2))
    got = ParamSpec("lr", "log-continuous", 1e-5, 1e-2).decode(0.5)
    assert got == pytest.approx(expected, rel=1e-12)
    assert got == pytest.approx(3.1623e-4, rel=1e-4)


def test_integer_rounds_half_up():
    spec = ParamSpec("n", "integer", 0, 2)
    assert spec.decode(0.25) == 1  # 0.5 rounds up
    assert spec.decode(0.2499) == 0


def test_continuous_linear():
    assert ParamSpec("d", "continuous", 0.0, 0.5).decode(0.4) == pytest.approx(0.2)


@pytest.mark.parametrize("genes,expected", [([0.5, 0.5], [0.5, 0.5]), ([-0.2, 1.7], [0.0, 1.0]),
                                            ([1.0, 0.0], [1.0, 0.0])])
def test_clamp_examples(genes, expected):
    assert clamp(genes).tolist() == expected


def test_clamp_rejects_nonfinite():
    with pytest.raises(NumericError):
        clamp([0.1, math.nan])


def test_decode_errors():
    with pytest.raises(CodecError):
        decode(SPACE, [0.1, 0.2])
    with pytest.raises(DomainError):
        decode(SPACE, [0.1, 0.2, 1.2])
    with pytest.raises(NumericError):
        decode(SPACE, [0.1, math.inf, 0.2])


def test_default_space_shape():
    assert SPACE.names == ["batch_size", "epochs", "learning_rate"]
    hp = decode(SPACE, [0.0, 1.0, 1.0])
    assert hp == HyperParams(4, 500, 1e-2, 0.1)
    tuned = default_space(tune_dropout=True)
    assert tuned.dim == 4 and decode(tuned, [0, 0, 0, 1.0]).dropout == 0.5


def test_paramspec_invariants():
    with pytest.raises(ValueError):
        ParamSpec("x", "integer", 3, 3)
    with pytest.raises(ValueError):
        ParamSpec("x", "log-continuous", 0.0, 1.0)
    with pytest.raises(ValueError):
        ParamSpec("x", "categorical", 0, 1)
    with pytest.raises(ValueError):
        SearchSpace((ParamSpec("a", "continuous", 0, 1), ParamSpec("a", "continuous", 0, 1)))


def test_space_dict_roundtrip():
    assert SearchSpace.from_dict(SPACE.to_dict()) == SPACE
    with pytest.raises(ValueError):
        SearchSpace.from_dict({"lr": {"kind": "continuous", "low": 0, "hi": 1}})


def test_hyperparams_parse():
    assert HyperParams.parse("B=8,E=50,lr=1e-3,dropout=0.1") == HyperParams(8, 50, 1e-3, 0.1)
    with pytest.raises(ValueError):
        HyperParams.parse("B=8,E=50")
    with pytest.raises(ValueError):
        HyperParams.parse("B=8,E=50,lr=1e-3,momentum=0.9")


def test_candidate_domain():
    with pytest.raises(DomainError):
        Candidate([0.5, 1.5])


def test_sample_uniform_determinism_and_dim():
    a = sample_uniform(SPACE, np.random.default_rng(7))
    b = sample_uniform(SPACE, np.random.default_rng(7))
    assert np.array_equal(a.genes, b.genes) and a.genes.shape == (3,) and a.fitness is None


def test_sample_uniform_moments():
    rng = np.random.default_rng(0)
    g = np.array([sample_uniform(SPACE, rng).genes for _ in range(10_000)])
    assert np.all((g.mean(axis=0) > 0.45) & (g.mean(axis=0) < 0.55))


@given(genes3)
def test_roundtrip_within_bounds(g):
    values = decode_values(SPACE, clamp(g))
    for spec in SPACE.params:
        assert spec.low <= values[spec.name] <= spec.high
    hp = decode(SPACE, clamp(g))
    assert isinstance(hp.batch_size, int) and isinstance(hp.epochs, int)


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(["continuous", "log-continuous", "integer"]))
def test_monotone(a, b, kind):
    lo, hi = sorted((a, b))
    spec = ParamSpec("x", kind, 1e-3, 50.0)
    assert spec.decode(lo) <= spec.decode(hi)


@given(genes3)
def test_decode_pure(g):
    c = clamp(g)
    assert decode(SPACE, c) == decode(SPACE, c.copy())
