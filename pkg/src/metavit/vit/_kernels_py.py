"""NumPy reference implementations of the row-wise kernels.

Same signatures and results as the compiled ``_kernels`` extension; used
when the extension is not built or ``METAVIT_PURE_PYTHON=1``.
All arrays are 2-D ``float64``: one row per token.
"""
import numpy as np


def layernorm_forward(x, gamma, beta, eps):
    mean = x.mean(axis=1, keepdims=True)
    xc = x - mean
    var = np.mean(xc * xc, axis=1, keepdims=True)
    rstd = 1.0 / np.sqrt(var + eps)
    xhat = xc * rstd
    return xhat * gamma + beta, xhat, rstd[:, 0]


def layernorm_backward(dy, xhat, rstd, gamma):
    dgamma = np.sum(dy * xhat, axis=0)
    dbeta = np.sum(dy, axis=0)
    dxhat = dy * gamma
    m1 = dxhat.mean(axis=1, keepdims=True)
    m2 = np.mean(dxhat * xhat, axis=1, keepdims=True)
    dx = (dxhat - m1 - xhat * m2) * rstd[:, None]
    return dx, dgamma, dbeta


def softmax_rows(x):
    z = x - x.max(axis=1, keepdims=True)
    np.exp(z, out=z)
    z /= z.sum(axis=1, keepdims=True)
    return z


def softmax_rows_backward(dy, y):
    return y * (dy - np.sum(dy * y, axis=1, keepdims=True))


def adam_update(params, grads, m, v, lr, beta1, beta2, bias1, bias2, eps):
    """In-place Adam step; ``bias1``/``bias2`` are ``1 - beta**t``."""
    m *= beta1
    m += (1.0 - beta1) * grads
    v *= beta2
    v += (1.0 - beta2) * (grads * grads)
    params -= lr * (m / bias1) / (np.sqrt(v / bias2) + eps)
