"""Synthetic three-class image data, stratified splitting, augmentation,
resizing and the binary dataset file format.

Dataset file layout (all little-endian)::

    magic    4 bytes  b"SVDS"
    version  u16      1
    count    u32      number of samples
    size     u16      image side length
    channels u8
    split    u8       0 = all, 1 = train, 2 = test, 3 = validation
    count x [ label u8, size*size*channels float32 pixels (row, column, channel) ]
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, NamedTuple, Optional, Sequence

import numpy as np

NUM_CLASSES = 3
SPLIT_FRACTIONS = (0.68, 0.20, 0.12)
SPLIT_CODES = {"all": 0, "train": 1, "test": 2, "validation": 3}
MAGIC = b"SVDS"
VERSION = 1
_HEADER = struct.Struct("<4sHIHBB")

# blob centers as fractions of the canvas: AD upper-left, MCI center, HC lower-right
_CENTERS = ((0.25, 0.25), (0.5, 0.5), (0.75, 0.75))


class DatasetFormatError(ValueError):
    pass


class MagicMismatch(DatasetFormatError):
    pass


class VersionMismatch(DatasetFormatError):
    pass


class TruncatedFile(DatasetFormatError):
    pass


class EmptyDataset(DatasetFormatError):
    pass


class StratificationError(ValueError):
    pass


class LabeledImage(NamedTuple):
    pixels: np.ndarray
    label: int


@dataclass
class Dataset:
    """Images ``(n, size, size, channels)`` float32 in [0, 1] with integer labels.

    ``ids`` identify samples across splits of the same source dataset.
    """

    images: np.ndarray
    labels: np.ndarray
    ids: Optional[np.ndarray] = None
    split: str = "all"

    def __post_init__(self):
        self.images = np.asarray(self.images, dtype=np.float32)
        if self.images.ndim == 3:
            self.images = self.images[..., None]
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.ids is None:
            self.ids = np.arange(len(self.labels), dtype=np.int64)
        self.ids = np.asarray(self.ids, dtype=np.int64)
        if self.images.ndim != 4 or self.images.shape[1] != self.images.shape[2]:
            raise ValueError(f"images must be (n, size, size, channels), got {self.images.shape}")
        if not (len(self.images) == len(self.labels) == len(self.ids)):
            raise ValueError("images, labels and ids must have equal length")
        if self.split not in SPLIT_CODES:
            raise ValueError(f"unknown split tag {self.split!r}")

    def __len__(self) -> int:
        return len(self.labels)

    def __iter__(self) -> Iterator[LabeledImage]:
        for px, lab in zip(self.images, self.labels):
            yield LabeledImage(px, int(lab))

    @property
    def image_size(self) -> int:
        return self.images.shape[1]

    @property
    def channels(self) -> int:
        return self.images.shape[3]

    def class_counts(self, num_classes: int = NUM_CLASSES) -> np.ndarray:
        return np.bincount(self.labels, minlength=num_classes)

    def subset(self, index, split: Optional[str] = None) -> "Dataset":
        index = np.asarray(index, dtype=np.int64)
        return Dataset(self.images[index], self.labels[index], self.ids[index], split or self.split)

    def __eq__(self, other) -> bool:
        return (isinstance(other, Dataset) and self.split == other.split
                and self.images.shape == other.images.shape
                and np.array_equal(self.images.view(np.uint32), other.images.view(np.uint32))
                and np.array_equal(self.labels, other.labels))


@dataclass(frozen=True)
class SynthSpec:
    n_samples: int = 600
    image_size: int = 32
    difficulty: float = 0.3
    seed: int = 0

    def __post_init__(self):
        if self.n_samples < 3:
            raise ValueError("n_samples must be >= 3")
        if self.image_size < 2:
            raise ValueError("image_size must be >= 2")
        if not 0.0 <= self.difficulty <= 1.0:
            raise ValueError("difficulty must lie in [0, 1]")


def class_template(label: int, size: int, center_shift=(0.0, 0.0), width: float = 0.12) -> np.ndarray:
    """Gaussian blob for ``label`` on a ``size x size`` canvas, peak value 1."""
    cy, cx = _CENTERS[label]
    cy, cx = (cy + center_shift[0]) * size, (cx + center_shift[1]) * size
    coords = np.arange(size) + 0.5
    yy, xx = np.meshgrid(coords, coords, indexing="ij")
    sigma = width * size
    return np.exp(-((yy - cy) ** 2 + (xx - cx) ** 2) / (2.0 * sigma * sigma))


def generate_synthetic(spec: SynthSpec) -> Dataset:
    """Balanced three-class blob images.

    Each class puts a bright Gaussian blob at its own location.  The
    ``difficulty`` knob scales both the additive uniform pixel noise
    (amplitude ``difficulty``) and a per-sample jitter of blob position and
    brightness; ``difficulty = 0`` gives one exact template per class.
    """
    rng = np.random.default_rng(spec.seed)
    n, size, diff = spec.n_samples, spec.image_size, spec.difficulty
    labels = rng.permutation(np.arange(n) % NUM_CLASSES)
    images = np.empty((n, size, size, 1), dtype=np.float32)
    for i, lab in enumerate(labels):
        shift = rng.uniform(-0.1, 0.1, 2) * diff
        amp = 1.0 - 0.5 * diff * rng.random()
        noise = rng.uniform(-1.0, 1.0, (size, size)) * diff
        img = amp * class_template(int(lab), size, shift) + noise
        images[i, :, :, 0] = np.clip(img, 0.0, 1.0)
    return Dataset(images, labels, np.arange(n), "all")


def _largest_remainder(total: int, fractions: Sequence[float]) -> list[int]:
    raw = [total * f for f in fractions]
    sizes = [int(np.floor(r)) for r in raw]
    rest = total - sum(sizes)
    order = sorted(range(len(raw)), key=lambda j: (-(raw[j] - sizes[j]), j))
    for j in order[:rest]:
        sizes[j] += 1
    return sizes


def split(dataset: Dataset, fractions: Sequence[float] = SPLIT_FRACTIONS, seed: int = 0,
          num_classes: int = NUM_CLASSES) -> tuple[Dataset, Dataset, Dataset]:
    """Stratified shuffle split into ``(train, test, validation)``.

    Per class the split sizes are the largest-remainder apportionment of
    the class count, so each is within one sample of ``fraction * count``.
    """
    if len(fractions) != 3 or abs(sum(fractions) - 1.0) > 1e-9 or min(fractions) < 0:
        raise ValueError(f"fractions must be three non-negative values summing to 1, got {fractions}")
    rng = np.random.default_rng(seed)
    parts: list[list[np.ndarray]] = [[], [], []]
    for c in range(num_classes):
        members = np.flatnonzero(dataset.labels == c)
        if members.size == 0:
            raise StratificationError(f"class {c} has no samples")
        members = rng.permutation(members)
        start = 0
        for j, size in enumerate(_largest_remainder(members.size, fractions)):
            parts[j].append(members[start:start + size])
            start += size
    out = []
    for j, tag in enumerate(("train", "test", "validation")):
        idx = np.sort(np.concatenate(parts[j]))
        out.append(dataset.subset(idx, tag))
    return tuple(out)


def hflip(image: np.ndarray) -> np.ndarray:
    return image[:, ::-1].copy()


def rotate(image: np.ndarray, degrees: float) -> np.ndarray:
    """Rotate about the canvas center, nearest-neighbor, zero fill, same shape."""
    h, w = image.shape[:2]
    theta = np.deg2rad(degrees)
    c, s = np.cos(theta), np.sin(theta)
    cy, cx = (h - 1) / 2.0, (w - 1) / 2.0
    yy, xx = np.meshgrid(np.arange(h) - cy, np.arange(w) - cx, indexing="ij")
    # inverse map from output pixel to source pixel
    sy = c * yy - s * xx + cy
    sx = s * yy + c * xx + cx
    iy = np.rint(sy).astype(np.int64)
    ix = np.rint(sx).astype(np.int64)
    inside = (iy >= 0) & (iy < h) & (ix >= 0) & (ix < w)
    out = np.zeros_like(image)
    out[inside] = image[iy[inside], ix[inside]]
    return out


def augment(image: np.ndarray, rng, max_degrees: float = 15.0) -> np.ndarray:
    """Random horizontal flip (p = 0.5) then rotation uniform in ``[-15, 15]`` degrees."""
    flip = rng.random() < 0.5
    angle = rng.uniform(-max_degrees, max_degrees)
    out = hflip(image) if flip else image
    if angle != 0.0:
        out = rotate(out, angle)
    return np.clip(out, 0.0, 1.0)


def augment_batch(images: np.ndarray, rng) -> np.ndarray:
    return np.stack([augment(img, rng) for img in images])


def resize(image: np.ndarray, target: int) -> np.ndarray:
    """Bilinear resize with pixel-center alignment and edge clamping."""
    if target < 1:
        raise ValueError("target size must be >= 1")
    img = np.asarray(image)
    h, w = img.shape[:2]
    if (h, w) == (target, target):
        return img.copy()

    def axis(n_in):
        src = (np.arange(target) + 0.5) * (n_in / target) - 0.5
        src = np.clip(src, 0.0, n_in - 1)
        lo = np.floor(src).astype(np.int64)
        hi = np.minimum(lo + 1, n_in - 1)
        return lo, hi, src - lo

    y0, y1, fy = axis(h)
    x0, x1, fx = axis(w)
    fy = fy.reshape((-1, 1) + (1,) * (img.ndim - 2))
    fx = fx.reshape((1, -1) + (1,) * (img.ndim - 2))
    top = img[y0][:, x0] * (1 - fx) + img[y0][:, x1] * fx
    bottom = img[y1][:, x0] * (1 - fx) + img[y1][:, x1] * fx
    return (top * (1 - fy) + bottom * fy).astype(img.dtype, copy=False)


def save_dataset(dataset: Dataset, path) -> None:
    n, size, _, ch = dataset.images.shape
    rec = np.dtype([("label", "u1"), ("pixels", "<f4", (size * size * ch,))])
    body = np.empty(n, dtype=rec)
    body["label"] = dataset.labels
    body["pixels"] = dataset.images.reshape(n, -1)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, VERSION, n, size, ch, SPLIT_CODES[dataset.split]))
        fh.write(body.tobytes())


def load_dataset(path) -> Dataset:
    raw = Path(path).read_bytes()
    if len(raw) < 4 or raw[:4] != MAGIC:
        raise MagicMismatch(f"{path}: not a dataset file (magic {raw[:4]!r})")
    if len(raw) < _HEADER.size:
        raise TruncatedFile(f"{path}: header truncated")
    _, version, n, size, ch, code = _HEADER.unpack_from(raw)
    if version != VERSION:
        raise VersionMismatch(f"{path}: format version {version}, expected {VERSION}")
    if n == 0:
        raise EmptyDataset(f"{path}: dataset holds no images")
    tags = {v: k for k, v in SPLIT_CODES.items()}
    if code not in tags:
        raise DatasetFormatError(f"{path}: unknown split code {code}")
    rec = np.dtype([("label", "u1"), ("pixels", "<f4", (size * size * ch,))])
    expected = _HEADER.size + n * rec.itemsize
    if len(raw) < expected:
        raise TruncatedFile(f"{path}: expected {expected} bytes, found {len(raw)}")
    if len(raw) > expected:
        raise DatasetFormatError(f"{path}: {len(raw) - expected} trailing bytes")
    body = np.frombuffer(raw, dtype=rec, count=n, offset=_HEADER.size)
    labels = body["label"].astype(np.int64)
    if np.any(labels >= NUM_CLASSES):
        raise DatasetFormatError(f"{path}: label out of range")
    images = body["pixels"].reshape(n, size, size, ch).astype(np.float32)
    return Dataset(images, labels, np.arange(n), tags[code])
