"""ViT configuration, parameters, forward pass and manual backward pass."""
from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from . import layers

LAYER_PARAM_NAMES = ("ln1_g", "ln1_b", "wq", "bq", "wk", "bk", "wv", "bv", "wo", "bo",
                     "ln2_g", "ln2_b", "w1", "b1", "w2", "b2")

CLASS_NAMES = ("AD", "MCI", "HC")


@dataclass(frozen=True)
class ViTConfig:
    image_size: int = 32
    channels: int = 1
    patch_size: int = 8
    embed_dim: int = 32
    num_layers: int = 2
    num_heads: int = 4
    head_dim: int = 8
    mlp_hidden: int = 64
    dropout: float = 0.1
    num_classes: int = 3
    ln_eps: float = 1e-6

    def __post_init__(self):
        for name in ("image_size", "channels", "patch_size", "embed_dim", "num_layers",
                     "num_heads", "head_dim", "mlp_hidden", "num_classes"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be positive")
        if self.image_size % self.patch_size:
            raise layers.ShapeError(
                f"image_size {self.image_size} is not divisible by patch_size {self.patch_size}")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must lie in [0, 1)")

    @property
    def num_patches(self) -> int:
        return (self.image_size // self.patch_size) ** 2

    @property
    def seq_len(self) -> int:
        return self.num_patches + 1

    @property
    def patch_dim(self) -> int:
        return self.patch_size * self.patch_size * self.channels

    @property
    def inner_dim(self) -> int:
        return self.num_heads * self.head_dim

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def full(cls, **kw) -> "ViTConfig":
        """224x224 grayscale input, 16x16 patches, 8 heads of width 64."""
        base = dict(image_size=224, channels=1, patch_size=16, embed_dim=64, num_layers=4,
                    num_heads=8, head_dim=64, mlp_hidden=128, dropout=0.1)
        base.update(kw)
        return cls(**base)

    @classmethod
    def desk(cls, **kw) -> "ViTConfig":
        return replace(cls(), **kw)

    @classmethod
    def tiny(cls, **kw) -> "ViTConfig":
        base = dict(image_size=8, channels=1, patch_size=4, embed_dim=8, num_layers=1,
                    num_heads=2, head_dim=4, mlp_hidden=16, dropout=0.0)
        base.update(kw)
        return cls(**base)


def param_shapes(cfg: ViTConfig) -> dict[str, tuple[int, ...]]:
    """Every parameter name mapped to its shape, in checkpoint order."""
    d, inner, hid = cfg.embed_dim, cfg.inner_dim, cfg.mlp_hidden
    shapes = {
        "patch_w": (cfg.patch_dim, d), "patch_b": (d,),
        "cls_token": (1, d), "pos_embed": (cfg.seq_len, d),
    }
    layer = {"ln1_g": (d,), "ln1_b": (d,), "wq": (d, inner), "bq": (inner,),
             "wk": (d, inner), "bk": (inner,), "wv": (d, inner), "bv": (inner,),
             "wo": (inner, d), "bo": (d,), "ln2_g": (d,), "ln2_b": (d,),
             "w1": (d, hid), "b1": (hid,), "w2": (hid, d), "b2": (d,)}
    for l in range(cfg.num_layers):
        for name in LAYER_PARAM_NAMES:
            shapes[f"layers.{l}.{name}"] = layer[name]
    shapes.update({"ln_g": (d,), "ln_b": (d,), "head_w": (d, cfg.num_classes), "head_b": (cfg.num_classes,)})
    return shapes


def truncated_normal(rng, shape, std: float = 0.02, bound: float = 2.0):
    """Normal(0, std) samples redrawn until within ``bound`` standard deviations."""
    out = rng.standard_normal(shape)
    bad = np.abs(out) > bound
    while bad.any():
        out[bad] = rng.standard_normal(int(bad.sum()))
        bad = np.abs(out) > bound
    return out * std


class ViTModel:
    """Parameter container.

    All parameters share one contiguous ``flat`` float64 buffer; ``params``
    maps each :func:`param_shapes` name to a view into it.  Update
    parameters in place so the views stay attached.
    """

    def __init__(self, config: ViTConfig, params: dict[str, np.ndarray]):
        shapes = param_shapes(config)
        if set(params) != set(shapes):
            missing = set(shapes) - set(params)
            extra = set(params) - set(shapes)
            raise ValueError(f"parameter mismatch; missing={sorted(missing)} extra={sorted(extra)}")
        for name, shape in shapes.items():
            if np.shape(params[name]) != shape:
                raise layers.ShapeError(f"{name}: expected {shape}, got {np.shape(params[name])}")
        self.config = config
        self.flat = np.concatenate([np.asarray(params[name], dtype=np.float64).ravel() for name in shapes])
        self.params = {}
        offset = 0
        for name, shape in shapes.items():
            size = int(np.prod(shape))
            self.params[name] = self.flat[offset:offset + size].reshape(shape)
            offset += size

    def flatten_grads(self, grads: dict[str, np.ndarray]) -> np.ndarray:
        return np.concatenate([grads[name].ravel() for name in self.params])

    @classmethod
    def initialize(cls, config: ViTConfig, rng: np.random.Generator, std: float = 0.02) -> "ViTModel":
        params = {}
        for name, shape in param_shapes(config).items():
            leaf = name.rsplit(".", 1)[-1]
            if leaf.endswith("_g"):
                params[name] = np.ones(shape)
            elif leaf.endswith("_b") or leaf in ("bq", "bk", "bv", "bo", "b1", "b2"):
                params[name] = np.zeros(shape)
            else:
                params[name] = truncated_normal(rng, shape, std)
        return cls(config, params)

    def copy(self) -> "ViTModel":
        return ViTModel(self.config, {k: v.copy() for k, v in self.params.items()})

    def layer(self, l: int) -> dict[str, np.ndarray]:
        prefix = f"layers.{l}."
        return {name: self.params[prefix + name] for name in LAYER_PARAM_NAMES}

    def num_parameters(self) -> int:
        return self.flat.size

    def __eq__(self, other) -> bool:
        return (isinstance(other, ViTModel) and self.config == other.config
                and all(np.array_equal(self.params[k], other.params[k]) for k in self.params))


def embed(patches, model: ViTModel):
    """Prepend the class token to the projected patches and add positions.

    ``patches`` is ``(N, P*P*C)`` or ``(B, N, P*P*C)``; the result has one
    more row than there are patches.
    """
    p = model.params
    x = np.asarray(patches, dtype=float)
    single = x.ndim == 2
    if single:
        x = x[None]
    if x.shape[1:] != (model.config.num_patches, model.config.patch_dim):
        raise layers.ShapeError(
            f"expected patches of shape (N={model.config.num_patches}, {model.config.patch_dim}), got {x.shape[1:]}")
    tokens = x @ p["patch_w"] + p["patch_b"]
    cls = np.broadcast_to(p["cls_token"], (x.shape[0], 1, model.config.embed_dim))
    z0 = np.concatenate([cls, tokens], axis=1) + p["pos_embed"]
    return z0[0] if single else z0


def encoder_block(z, model: ViTModel, l: int, rate: float = 0.0, rng=None):
    z = np.asarray(z, dtype=float)
    single = z.ndim == 2
    out, _ = layers.encoder_block_forward(z[None] if single else z, model.layer(l), model.config.num_heads,
                                          model.config.head_dim, rate, rng, model.config.ln_eps)
    return out[0] if single else out


def forward_cached(images, model: ViTModel, training: bool = False, rng=None, dropout=None):
    """Forward pass returning ``(logits, cache)``.

    Dropout at rate ``dropout`` (default ``model.config.dropout``) is
    active only when ``training`` is true and an ``rng`` is supplied.
    """
    cfg = model.config
    x = np.asarray(images, dtype=np.float64)
    if x.ndim == 3:
        x = x[..., None]
    if x.shape[1:] != (cfg.image_size, cfg.image_size, cfg.channels):
        raise layers.ShapeError(
            f"expected images (B, {cfg.image_size}, {cfg.image_size}, {cfg.channels}), got {x.shape}")
    rate = (cfg.dropout if dropout is None else dropout) if training else 0.0
    if rng is None:
        rate = 0.0
    patches = layers.extract_patches(x, cfg.patch_size)
    z = embed(patches, model)
    blocks = []
    for l in range(cfg.num_layers):
        z, c = layers.encoder_block_forward(z, model.layer(l), cfg.num_heads, cfg.head_dim, rate, rng, cfg.ln_eps)
        blocks.append(c)
    cls_state = z[:, 0, :]
    y, ln_cache = layers.layer_norm_forward(cls_state, model.params["ln_g"], model.params["ln_b"], cfg.ln_eps)
    logits = y @ model.params["head_w"] + model.params["head_b"]
    return logits, (patches, blocks, z.shape, ln_cache, y)


def forward(images, model: ViTModel, mode: str = "eval", rng=None, dropout=None):
    """Logits ``(batch, num_classes)``; ``mode`` is ``"eval"`` or ``"train"``."""
    if mode not in ("eval", "train"):
        raise ValueError(f"mode must be 'eval' or 'train', got {mode!r}")
    logits, _ = forward_cached(images, model, mode == "train", rng, dropout)
    return logits


def backward_from_cache(model: ViTModel, cache, dlogits) -> dict[str, np.ndarray]:
    p = model.params
    patches, blocks, zshape, ln_cache, y = cache
    g = {}
    dy, g["head_w"], g["head_b"] = layers.dense_backward(dlogits, y, p["head_w"])
    dcls, g["ln_g"], g["ln_b"] = layers.layer_norm_backward(dy, ln_cache)
    dz = np.zeros(zshape)
    dz[:, 0, :] = dcls
    for l in reversed(range(model.config.num_layers)):
        dz, gl = layers.encoder_block_backward(dz, blocks[l], model.layer(l))
        for name, val in gl.items():
            g[f"layers.{l}.{name}"] = val
    g["pos_embed"] = dz.sum(axis=0)
    g["cls_token"] = dz[:, :1, :].sum(axis=0)
    dtok = dz[:, 1:, :]
    _, g["patch_w"], g["patch_b"] = layers.dense_backward(dtok, patches, p["patch_w"])
    return {name: g[name].reshape(p[name].shape) for name in p}


def backward(model: ViTModel, images, labels, training: bool = False, rng=None, dropout=None):
    """Mean cross-entropy loss and its gradient for every parameter."""
    logits, cache = forward_cached(images, model, training, rng, dropout)
    loss, dlogits = layers.cross_entropy_loss(logits, labels)
    return loss, backward_from_cache(model, cache, dlogits)
