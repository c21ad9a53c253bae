"""Binary model checkpoints.

Layout (little-endian)::

    magic     4 bytes  b"SVIT"
    version   u16      1
    config    9 x u32  image_size, channels, patch_size, embed_dim, num_layers,
                       num_heads, head_dim, mlp_hidden, num_classes
    dropout   f64
    ln_eps    f64
    params    float64 values of every parameter in ``param_shapes`` order,
              each tensor row-major
"""
from __future__ import annotations

import struct
from pathlib import Path

import numpy as np

from .model import ViTConfig, ViTModel, param_shapes

MAGIC = b"SVIT"
VERSION = 1
_INT_FIELDS = ("image_size", "channels", "patch_size", "embed_dim", "num_layers",
               "num_heads", "head_dim", "mlp_hidden", "num_classes")
_HEADER = struct.Struct("<4sH" + "I" * len(_INT_FIELDS) + "dd")


class CheckpointError(ValueError):
    pass


def save_checkpoint(model: ViTModel, path) -> None:
    cfg = model.config
    header = _HEADER.pack(MAGIC, VERSION, *(getattr(cfg, f) for f in _INT_FIELDS), cfg.dropout, cfg.ln_eps)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(model.flat.astype("<f8").tobytes())


def load_checkpoint(path) -> ViTModel:
    raw = Path(path).read_bytes()
    if raw[:4] != MAGIC:
        raise CheckpointError(f"{path}: bad magic {raw[:4]!r}")
    if len(raw) < _HEADER.size:
        raise CheckpointError(f"{path}: truncated header")
    fields = _HEADER.unpack_from(raw)
    if fields[1] != VERSION:
        raise CheckpointError(f"{path}: unsupported version {fields[1]}")
    ints = dict(zip(_INT_FIELDS, fields[2:2 + len(_INT_FIELDS)]))
    cfg = ViTConfig(**ints, dropout=fields[-2], ln_eps=fields[-1])
    shapes = param_shapes(cfg)
    size = sum(int(np.prod(s)) for s in shapes.values())
    if len(raw) != _HEADER.size + 8 * size:
        raise CheckpointError(f"{path}: expected {size} parameters, file size {len(raw)} does not match")
    flat = np.frombuffer(raw, dtype="<f8", offset=_HEADER.size).astype(np.float64)
    params, offset = {}, 0
    for name, shape in shapes.items():
        n = int(np.prod(shape))
        params[name] = flat[offset:offset + n].reshape(shape)
        offset += n
    return ViTModel(cfg, params)
