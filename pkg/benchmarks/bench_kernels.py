"""Compare the compiled kernels with the NumPy fallback.

Times each kernel on shapes taken from the desk ViT configuration, then one
full training epoch with each backend swapped in.  Usage::

    python benchmarks/bench_kernels.py [--repeat 5] [--json out.json]
"""
from __future__ import annotations

import argparse
import json
import sys
import timeit
from contextlib import contextmanager

import numpy as np

from metavit.datagen import SynthSpec, generate_synthetic
from metavit.searchspace import HyperParams
from metavit.vit import kernels
from metavit.vit.model import ViTConfig, ViTModel
from metavit.vit.train import train


@contextmanager
def use_backend(module):
    saved = {name: getattr(kernels, name) for name in kernels.KERNEL_NAMES}
    try:
        for name in kernels.KERNEL_NAMES:
            setattr(kernels, name, getattr(module, name))
        yield
    finally:
        for name, fn in saved.items():
            setattr(kernels, name, fn)


def kernel_cases(cfg: ViTConfig, batch: int, rng):
    rows = batch * cfg.seq_len
    x = rng.normal(size=(rows, cfg.embed_dim))
    gamma, beta = rng.normal(size=cfg.embed_dim), rng.normal(size=cfg.embed_dim)
    scores = rng.normal(size=(batch * cfg.num_heads * cfg.seq_len, cfg.seq_len))
    n_params = ViTModel.initialize(cfg, rng).num_parameters()
    p, g = rng.normal(size=n_params), rng.normal(size=n_params)
    m, v = np.zeros(n_params), np.zeros(n_params)

    def cases(k):
        y, xhat, rstd = k.layernorm_forward(x, gamma, beta, 1e-6)
        sm = k.softmax_rows(scores.copy())
        return {
            "layernorm_forward": lambda: k.layernorm_forward(x, gamma, beta, 1e-6),
            "layernorm_backward": lambda: k.layernorm_backward(y, xhat, rstd, gamma),
            "softmax_rows": lambda: k.softmax_rows(scores.copy()),
            "softmax_rows_backward": lambda: k.softmax_rows_backward(sm, sm),
            "adam_update": lambda: k.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 0.1, 0.001, 1e-8),
        }
    return cases


def best_time(fn, repeat: int, number: int) -> float:
    return min(timeit.repeat(fn, repeat=repeat, number=number)) / number


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--repeat", type=int, default=5)
    ap.add_argument("--batch", type=int, default=8)
    ap.add_argument("--samples", type=int, default=96, help="training samples for the epoch timing")
    ap.add_argument("--json", help="write results here")
    args = ap.parse_args(argv)

    backends = kernels.available_backends()
    if "cython" not in backends:
        print("compiled extension not built; only the NumPy fallback is available", file=sys.stderr)
    cfg = ViTConfig.desk()
    cases = kernel_cases(cfg, args.batch, np.random.default_rng(0))
    results: dict[str, dict[str, float]] = {}
    for name, mod in backends.items():
        results[name] = {k: best_time(fn, args.repeat, 50) for k, fn in cases(mod).items()}

    data = generate_synthetic(SynthSpec(args.samples, cfg.image_size, 0.3, seed=0))
    hp = HyperParams(args.batch, 1, 1e-3, cfg.dropout)
    for name, mod in backends.items():
        with use_backend(mod):
            def epoch():
                model = ViTModel.initialize(cfg, np.random.default_rng(0))
                train(model, data, hp, np.random.default_rng(0))
            results[name]["train_epoch"] = best_time(epoch, args.repeat, 1)

    names = list(backends)
    header = f"{'kernel':24s}" + "".join(f"{n + ' (us)':>16s}" for n in names)
    if "cython" in names:
        header += f"{'speedup':>10s}"
    print(header)
    for kernel in results[names[0]]:
        line = f"{kernel:24s}" + "".join(f"{results[n][kernel] * 1e6:16.1f}" for n in names)
        if "cython" in names:
            line += f"{results['python'][kernel] / results['cython'][kernel]:9.2f}x"
        print(line)
    if args.json:
        with open(args.json, "w") as fh:
            json.dump(results, fh, indent=2)
    return 0


if __name__ == "__main__":
    sys.exit(main())
