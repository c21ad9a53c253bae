"""Mini-batch Adam training loop for :class:`ViTModel`."""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import kernels
from .layers import cross_entropy_loss, sparse_categorical_accuracy
from .model import ViTModel, backward_from_cache, forward, forward_cached

logger = logging.getLogger(__name__)


class TrainingDiverged(ArithmeticError):
    def __init__(self, epoch: int, loss: float):
        super().__init__(f"non-finite loss {loss} in epoch {epoch}")
        self.epoch = epoch
        self.loss = loss


@dataclass
class TrainHistory:
    loss: list[float] = field(default_factory=list)
    val_accuracy: list[float] = field(default_factory=list)

    def __len__(self) -> int:
        return len(self.loss)


class Adam:
    """Adam over one flat parameter vector, updated in place."""

    def __init__(self, size: int, lr: float, beta1: float = 0.9, beta2: float = 0.999, eps: float = 1e-8):
        self.lr, self.beta1, self.beta2, self.eps = lr, beta1, beta2, eps
        self.m = np.zeros(size)
        self.v = np.zeros(size)
        self.t = 0

    def step(self, params: np.ndarray, grads: np.ndarray) -> None:
        self.t += 1
        kernels.adam_update(params, grads, self.m, self.v, self.lr, self.beta1, self.beta2,
                            1.0 - self.beta1 ** self.t, 1.0 - self.beta2 ** self.t, self.eps)


def predict_logits(model: ViTModel, images, batch_size: int = 256) -> np.ndarray:
    out = [forward(images[i:i + batch_size], model) for i in range(0, len(images), batch_size)]
    return np.concatenate(out) if out else np.zeros((0, model.config.num_classes))


def train(model: ViTModel, train_set, hp, rng: np.random.Generator, validation=None,
          augment: bool = False):
    """Train ``model`` in place and return ``(model, history)``.

    ``train_set`` and ``validation`` are :class:`~metavit.datagen.Dataset`
    objects (anything with ``images`` and ``labels``).  Each epoch visits a
    fresh permutation drawn from ``rng`` in batches of ``hp.batch_size``;
    dropout runs at ``hp.dropout``.  Raises :class:`TrainingDiverged` on a
    non-finite batch loss.
    """
    from ..datagen import augment_batch

    images, labels = train_set.images, train_set.labels
    n = len(labels)
    if n == 0:
        raise ValueError("cannot train on an empty dataset")
    opt = Adam(model.flat.size, hp.learning_rate)
    history = TrainHistory()
    for epoch in range(hp.epochs):
        order = rng.permutation(n)
        total, seen = 0.0, 0
        for start in range(0, n, hp.batch_size):
            idx = order[start:start + hp.batch_size]
            xb = images[idx]
            if augment:
                xb = augment_batch(xb, rng)
            logits, cache = forward_cached(xb, model, True, rng, hp.dropout)
            loss, dlogits = cross_entropy_loss(logits, labels[idx])
            if not np.isfinite(loss):
                raise TrainingDiverged(epoch, loss)
            grads = backward_from_cache(model, cache, dlogits)
            opt.step(model.flat, model.flatten_grads(grads))
            total += loss * len(idx)
            seen += len(idx)
        history.loss.append(total / seen)
        if not np.isfinite(model.flat).all():
            raise TrainingDiverged(epoch, float("nan"))
        if validation is not None and len(validation.labels):
            acc = sparse_categorical_accuracy(predict_logits(model, validation.images), validation.labels)
            history.val_accuracy.append(acc)
        logger.debug("epoch %d loss %.5f", epoch, history.loss[-1])
    return model, history
