"""Functional building blocks of the ViT, forward and backward.

Arrays follow a ``(batch, tokens, features)`` layout.  Each ``*_forward``
returns its output plus a cache tuple consumed by the matching
``*_backward``.
"""
from __future__ import annotations

import numpy as np

from . import kernels


class ShapeError(ValueError):
    pass


def relu(x):
    return np.maximum(x, 0.0)


def softmax(z, axis: int = -1):
    """Numerically stable softmax along ``axis``."""
    z = np.asarray(z, dtype=float)
    e = np.exp(z - z.max(axis=axis, keepdims=True))
    return e / e.sum(axis=axis, keepdims=True)


def extract_patches(images, patch: int):
    """Split images into flattened non-overlapping patches.

    Parameters
    ----------
    images : ndarray, shape (H, W, C) or (B, H, W, C)
    patch : int
        Patch side length; must divide ``H`` and ``W``.

    Returns
    -------
    ndarray, shape (N, P*P*C) or (B, N, P*P*C)
        Patches in row-major order; each patch flattened over
        (row, column, channel).
    """
    x = np.asarray(images)
    single = x.ndim == 3
    if single:
        x = x[None]
    if x.ndim != 4:
        raise ShapeError(f"expected (B, H, W, C) images, got shape {x.shape}")
    b, h, w, c = x.shape
    if h % patch or w % patch:
        raise ShapeError(f"image size {h}x{w} not divisible by patch size {patch}")
    nh, nw = h // patch, w // patch
    out = x.reshape(b, nh, patch, nw, patch, c).transpose(0, 1, 3, 2, 4, 5).reshape(b, nh * nw, patch * patch * c)
    return out[0] if single else out


def layer_norm(x, gamma, beta, eps: float = 1e-6):
    y, _ = layer_norm_forward(x, gamma, beta, eps)
    return y


def layer_norm_forward(x, gamma, beta, eps: float = 1e-6):
    shape = x.shape
    x2 = np.ascontiguousarray(x, dtype=np.float64).reshape(-1, shape[-1])
    y, xhat, rstd = kernels.layernorm_forward(x2, np.ascontiguousarray(gamma, dtype=np.float64),
                                              np.ascontiguousarray(beta, dtype=np.float64), float(eps))
    return np.asarray(y).reshape(shape), (xhat, rstd, gamma, shape)


def layer_norm_backward(dy, cache):
    xhat, rstd, gamma, shape = cache
    dy2 = np.ascontiguousarray(dy, dtype=np.float64).reshape(-1, shape[-1])
    dx, dgamma, dbeta = kernels.layernorm_backward(dy2, xhat, rstd, np.ascontiguousarray(gamma, dtype=np.float64))
    return np.asarray(dx).reshape(shape), np.asarray(dgamma), np.asarray(dbeta)


def softmax_lastaxis(x):
    shape = x.shape
    y = kernels.softmax_rows(np.ascontiguousarray(x, dtype=np.float64).reshape(-1, shape[-1]))
    return np.asarray(y).reshape(shape)


def softmax_lastaxis_backward(dy, y):
    shape = y.shape
    dx = kernels.softmax_rows_backward(np.ascontiguousarray(dy, dtype=np.float64).reshape(-1, shape[-1]),
                                       np.ascontiguousarray(y).reshape(-1, shape[-1]))
    return np.asarray(dx).reshape(shape)


def dropout_mask(shape, rate: float, rng):
    """Inverted-dropout mask: kept entries scaled by ``1 / (1 - rate)``."""
    if rate <= 0.0 or rng is None:
        return None
    return (rng.random(shape) >= rate) / (1.0 - rate)


def dense_backward(dy, x, w):
    """Gradients of ``y = x @ w + b`` for ``x`` of any leading shape."""
    x2 = x.reshape(-1, x.shape[-1])
    dy2 = dy.reshape(-1, dy.shape[-1])
    return (dy @ w.T), x2.T @ dy2, dy2.sum(axis=0)


def attention_forward(x, p, heads: int, head_dim: int, rate: float = 0.0, rng=None):
    """Multi-head scaled dot-product self-attention.

    ``p`` maps ``wq, bq, wk, bk, wv, bv, wo, bo`` to arrays; the inner width
    is ``heads * head_dim`` and ``wo`` projects it back to the model width.
    Dropout (training only) is applied to the attention weights.
    """
    b, s, _ = x.shape
    inner = heads * head_dim

    def split(t):
        return t.reshape(b, s, heads, head_dim).transpose(0, 2, 1, 3)

    q = split(x @ p["wq"] + p["bq"])
    k = split(x @ p["wk"] + p["bk"])
    v = split(x @ p["wv"] + p["bv"])
    scale = 1.0 / np.sqrt(head_dim)
    weights = softmax_lastaxis((q @ k.transpose(0, 1, 3, 2)) * scale)
    mask = dropout_mask(weights.shape, rate, rng)
    w_used = weights * mask if mask is not None else weights
    ctx = (w_used @ v).transpose(0, 2, 1, 3).reshape(b, s, inner)
    out = ctx @ p["wo"] + p["bo"]
    return out, (x, q, k, v, weights, mask, w_used, ctx, scale, heads, head_dim)


def attention_backward(dout, cache, p):
    x, q, k, v, weights, mask, w_used, ctx, scale, heads, head_dim = cache
    b, s, _ = x.shape
    g = {}
    dctx, g["wo"], g["bo"] = dense_backward(dout, ctx, p["wo"])
    dctx = dctx.reshape(b, s, heads, head_dim).transpose(0, 2, 1, 3)
    dw_used = dctx @ v.transpose(0, 1, 3, 2)
    dv = w_used.transpose(0, 1, 3, 2) @ dctx
    dweights = dw_used * mask if mask is not None else dw_used
    dscores = softmax_lastaxis_backward(dweights, weights) * scale
    dq = dscores @ k
    dk = dscores.transpose(0, 1, 3, 2) @ q

    def merge(t):
        return t.transpose(0, 2, 1, 3).reshape(b, s, heads * head_dim)

    dx = np.zeros_like(x)
    for name, dt in (("q", dq), ("k", dk), ("v", dv)):
        dpart, g["w" + name], g["b" + name] = dense_backward(merge(dt), x, p["w" + name])
        dx += dpart
    return dx, g


def multi_head_self_attention(z, p, heads: int, head_dim: int):
    """Evaluation-mode MSA on a single ``(S, D)`` sequence or a batch."""
    z = np.asarray(z, dtype=float)
    single = z.ndim == 2
    out, cache = attention_forward(z[None] if single else z, p, heads, head_dim)
    return (out[0] if single else out), (cache[4][0] if single else cache[4])


def mlp_forward(x, p, rate: float = 0.0, rng=None):
    pre = x @ p["w1"] + p["b1"]
    h = relu(pre)
    m1 = dropout_mask(h.shape, rate, rng)
    hd = h * m1 if m1 is not None else h
    out = hd @ p["w2"] + p["b2"]
    m2 = dropout_mask(out.shape, rate, rng)
    if m2 is not None:
        out = out * m2
    return out, (x, pre, hd, m1, m2)


def mlp_backward(dout, cache, p):
    x, pre, hd, m1, m2 = cache
    g = {}
    if m2 is not None:
        dout = dout * m2
    dhd, g["w2"], g["b2"] = dense_backward(dout, hd, p["w2"])
    dh = dhd * m1 if m1 is not None else dhd
    dpre = dh * (pre > 0)
    dx, g["w1"], g["b1"] = dense_backward(dpre, x, p["w1"])
    return dx, g


def encoder_block_forward(z, p, heads, head_dim, rate: float = 0.0, rng=None, eps: float = 1e-6):
    """Pre-norm block: ``z' = MSA(LN(z)) + z``; ``out = MLP(LN(z')) + z'``."""
    a, ln1 = layer_norm_forward(z, p["ln1_g"], p["ln1_b"], eps)
    msa, att = attention_forward(a, p, heads, head_dim, rate, rng)
    z_mid = z + msa
    c, ln2 = layer_norm_forward(z_mid, p["ln2_g"], p["ln2_b"], eps)
    mlp, mc = mlp_forward(c, p, rate, rng)
    return z_mid + mlp, (ln1, att, ln2, mc)


def encoder_block_backward(dout, cache, p):
    ln1, att, ln2, mc = cache
    g = {}
    dc, gm = mlp_backward(dout, mc, p)
    g.update(gm)
    dmid_ln, g["ln2_g"], g["ln2_b"] = layer_norm_backward(dc, ln2)
    dmid = dout + dmid_ln
    da, ga = attention_backward(dmid, att, p)
    g.update(ga)
    dz_ln, g["ln1_g"], g["ln1_b"] = layer_norm_backward(da, ln1)
    return dmid + dz_ln, g


def cross_entropy_loss(logits, labels):
    """Mean softmax cross-entropy and its gradient with respect to ``logits``."""
    logits = np.asarray(logits, dtype=float)
    labels = np.asarray(labels)
    n, k = logits.shape
    if labels.shape != (n,):
        raise ShapeError(f"labels shape {labels.shape} does not match {n} logits rows")
    if np.any(labels < 0) or np.any(labels >= k):
        raise ValueError(f"labels must lie in [0, {k})")
    z = logits - logits.max(axis=1, keepdims=True)
    logsum = np.log(np.exp(z).sum(axis=1))
    rows = np.arange(n)
    loss = float(np.mean(logsum - z[rows, labels]))
    grad = np.exp(z - logsum[:, None])
    grad[rows, labels] -= 1.0
    return loss, grad / n


def sparse_categorical_accuracy(logits, labels) -> float:
    """Fraction of rows whose argmax (lowest index on ties) equals the label."""
    logits = np.asarray(logits)
    labels = np.asarray(labels)
    if logits.shape[0] != labels.shape[0]:
        raise ShapeError("logits and labels disagree on batch size")
    if labels.size == 0:
        return float("nan")
    return float(np.mean(np.argmax(logits, axis=1) == labels))
