"""Shared fixtures-as-functions for the test modules."""
import numpy as np

from metavit.vit.model import ViTConfig, ViTModel, backward

GRAD_STEP = 1e-5
REL_FLOOR = 1e-6


def gradcheck_model(seed: int = 0):
    """Tiny double-precision model with non-degenerate parameters.

    Weights are drawn wider than the training initializer and biases and
    LayerNorm gains are perturbed away from their 0/1 defaults, so every
    coordinate carries a meaningful gradient.
    """
    cfg = ViTConfig.tiny()
    rng = np.random.default_rng(seed)
    model = ViTModel.initialize(cfg, rng, std=0.5)
    for name, value in model.params.items():
        leaf = name.rsplit(".", 1)[-1]
        if leaf.endswith("_g"):
            value += rng.normal(0.0, 0.2, value.shape)
        elif leaf.endswith("_b") or leaf in ("bq", "bk", "bv", "bo", "b1", "b2"):
            value += rng.normal(0.0, 0.2, value.shape)
    images = rng.random((2, cfg.image_size, cfg.image_size, cfg.channels))
    labels = np.array([0, 2])
    return model, images, labels


def gradient_check(model, images, labels, h: float = GRAD_STEP):
    """Largest relative error between analytic and central-difference gradients.

    Relative error is ``|a - n| / max(|a|, |n|, REL_FLOOR)``; the floor keeps
    coordinates whose true gradient is exactly zero from dividing rounding
    noise by zero.  Returns ``(worst_error, worst_name, coordinates_checked)``.
    """
    _, grads = backward(model, images, labels)
    worst, worst_name, count = 0.0, None, 0
    for name, value in model.params.items():
        analytic = grads[name]
        flat = value.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up, _ = backward(model, images, labels)
            flat[i] = orig - h
            down, _ = backward(model, images, labels)
            flat[i] = orig
            numeric = (up - down) / (2 * h)
            a = analytic.reshape(-1)[i]
            err = abs(a - numeric) / max(abs(a), abs(numeric), REL_FLOOR)
            count += 1
            if err > worst:
                worst, worst_name = err, f"{name}[{i}]"
    return worst, worst_name, count


def zero_sublayers(model):
    for l in range(model.config.num_layers):
        for name, value in model.layer(l).items():
            if not name.startswith("ln"):
                value[...] = 0.0
