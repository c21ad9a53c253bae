import struct

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from metavit.datagen import (Dataset, DatasetFormatError, EmptyDataset, MagicMismatch, StratificationError,
                             SynthSpec, TruncatedFile, VersionMismatch, augment, generate_synthetic, hflip,
                             load_dataset, resize, rotate, save_dataset, split)


class ScriptedRng:
    """Stand-in generator returning fixed draws: ``random()`` then ``uniform()``."""

    def __init__(self, u, angle):
        self.u, self.angle = u, angle

    def random(self):
        return self.u

    def uniform(self, lo, hi):
        return self.angle


@pytest.fixture(scope="module")
def ds600():
    return generate_synthetic(SynthSpec(600, 16, 0.3, seed=1))


def test_balanced_counts(ds600):
    assert ds600.class_counts().tolist() == [200, 200, 200]
    assert generate_synthetic(SynthSpec(7, 8, 0.1)).class_counts().tolist() == [3, 2, 2]


def test_pixel_range_and_shape(ds600):
    assert ds600.images.dtype == np.float32 and ds600.images.shape == (600, 16, 16, 1)
    assert ds600.images.min() >= 0.0 and ds600.images.max() <= 1.0


def test_generator_deterministic():
    a = generate_synthetic(SynthSpec(30, 8, 0.5, seed=4))
    b = generate_synthetic(SynthSpec(30, 8, 0.5, seed=4))
    c = generate_synthetic(SynthSpec(30, 8, 0.5, seed=5))
    assert a == b and a != c


@pytest.mark.parametrize("size", [4, 8, 32])
def test_noiseless_nearest_centroid(size):
    ds = generate_synthetic(SynthSpec(60, size, 0.0, seed=3))
    flat = ds.images.reshape(len(ds), -1).astype(float)
    centroids = np.stack([flat[ds.labels == c].mean(axis=0) for c in range(3)])
    pred = np.argmin(((flat[:, None, :] - centroids[None]) ** 2).sum(axis=2), axis=1)
    assert np.all(pred == ds.labels)


def test_blob_locations():
    ds = generate_synthetic(SynthSpec(3, 16, 0.0, seed=0))
    for img, label in ds:
        y, x = np.unravel_index(np.argmax(img[..., 0]), (16, 16))
        cy, cx = {0: (4, 4), 1: (8, 8), 2: (12, 12)}[label]
        assert abs(y + 0.5 - cy) <= 1 and abs(x + 0.5 - cx) <= 1


def test_spec_validation():
    with pytest.raises(ValueError):
        SynthSpec(2)
    with pytest.raises(ValueError):
        SynthSpec(10, difficulty=1.5)


def test_split_sizes(ds600):
    train, test, val = split(ds600, seed=0)
    assert (len(train), len(test), len(val)) == (408, 120, 72)
    assert (train.split, test.split, val.split) == ("train", "test", "validation")


def test_split_partition_and_determinism(ds600):
    parts = split(ds600, seed=9)
    ids = [set(p.ids.tolist()) for p in parts]
    assert set().union(*ids) == set(range(600))
    assert not (ids[0] & ids[1] or ids[0] & ids[2] or ids[1] & ids[2])
    again = split(ds600, seed=9)
    assert all(np.array_equal(a.ids, b.ids) for a, b in zip(parts, again))
    assert not np.array_equal(parts[0].ids, split(ds600, seed=10)[0].ids)


@given(st.integers(3, 200), st.integers(0, 10_000))
@settings(max_examples=40)
def test_stratification_property(n, seed):
    ds = Dataset(np.zeros((n, 2, 2, 1)), np.arange(n) % 3)
    parts = split(ds, seed=seed)
    for c, count in enumerate(ds.class_counts()):
        for frac, part in zip((0.68, 0.2, 0.12), parts):
            assert abs((part.labels == c).sum() - frac * count) <= 1
    assert sum(len(p) for p in parts) == n


def test_split_errors():
    ds = Dataset(np.zeros((4, 2, 2, 1)), [0, 0, 1, 1])
    with pytest.raises(StratificationError):
        split(ds)
    with pytest.raises(ValueError):
        split(ds, fractions=(0.5, 0.5, 0.5))


def test_augment_identity_draw(rng):
    img = rng.random((8, 8, 1)).astype(np.float32)
    assert np.array_equal(augment(img, ScriptedRng(0.9, 0.0)), img)


def test_flip_involution(rng):
    img = rng.random((8, 8, 1)).astype(np.float32)
    once = augment(img, ScriptedRng(0.1, 0.0))
    assert np.array_equal(once, img[:, ::-1])
    assert np.array_equal(augment(once, ScriptedRng(0.1, 0.0)), img)
    assert np.array_equal(hflip(hflip(img)), img)


@given(st.floats(-15, 15))
@settings(max_examples=20)
def test_rotation_shape_and_range(angle):
    img = np.random.default_rng(0).random((9, 9, 1)).astype(np.float32)
    out = augment(img, ScriptedRng(0.9, angle))
    assert out.shape == img.shape and out.min() >= 0 and out.max() <= 1


def test_rotation_quarter_turn():
    img = np.arange(9, dtype=float).reshape(3, 3, 1)
    assert np.array_equal(rotate(img, 90.0)[..., 0], np.rot90(img[..., 0], k=1)) or \
        np.array_equal(rotate(img, 90.0)[..., 0], np.rot90(img[..., 0], k=-1))


def test_augment_statistics():
    rng = np.random.default_rng(0)
    img = np.zeros((8, 8, 1), np.float32)
    img[:, :4] = 1.0
    flips = sum(augment(img, rng)[:, -1].mean() > 0.5 for _ in range(2000))
    assert 900 < flips < 1100


def test_resize_identity_and_constant(rng):
    img = rng.random((6, 6, 1)).astype(np.float32)
    assert np.array_equal(resize(img, 6), img)
    const = np.full((5, 5, 1), 0.3, np.float32)
    for t in (1, 3, 11):
        assert np.allclose(resize(const, t), 0.3)


def test_resize_checkerboard():
    board = (np.indices((4, 4)).sum(axis=0) % 2).astype(float)
    out = resize(board, 2)
    blocks = board.reshape(2, 2, 2, 2).mean(axis=(1, 3))
    assert np.allclose(out, blocks)


@given(st.integers(1, 20))
def test_resize_range(t):
    img = np.random.default_rng(t).random((7, 7, 1))
    out = resize(img, t)
    assert out.shape == (t, t, 1) and out.min() >= img.min() - 1e-12 and out.max() <= img.max() + 1e-12


def test_roundtrip(tmp_path, ds600):
    path = tmp_path / "d.svds"
    part = split(ds600, seed=0)[2]
    save_dataset(part, path)
    back = load_dataset(path)
    assert back == part and back.split == "validation"
    raw = path.read_bytes()
    assert raw[:4] == b"SVDS" and struct.unpack_from("<HIHB", raw, 4) == (1, 72, 16, 1)


def test_format_errors(tmp_path):
    ds = generate_synthetic(SynthSpec(6, 4, 0.1))
    good = tmp_path / "g.svds"
    save_dataset(ds, good)
    raw = good.read_bytes()
    cases = {"magic": (b"XVDS" + raw[4:], MagicMismatch),
             "version": (raw[:4] + struct.pack("<H", 9) + raw[6:], VersionMismatch),
             "trunc": (raw[:-3], TruncatedFile),
             "header": (raw[:7], TruncatedFile),
             "empty": (raw[:4] + struct.pack("<HIHBB", 1, 0, 4, 1, 0), EmptyDataset),
             "trailing": (raw + b"\0", DatasetFormatError)}
    for name, (blob, exc) in cases.items():
        p = tmp_path / f"{name}.svds"
        p.write_bytes(blob)
        with pytest.raises(exc):
            load_dataset(p)
    assert issubclass(MagicMismatch, DatasetFormatError)
