"""Command-line entry point: ``metavit <command> ...``.

Exit codes: 0 success, 1 configuration or usage error, 2 runtime failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class UsageError(ValueError):
    pass


def _int_list(text: str) -> list[int]:
    try:
        return [int(s) for s in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma separated list of integers, got {text!r}") from None


def _progress(rid, stats) -> None:
    best = "inf" if stats.best is None else f"{stats.best:.6g}"
    print(f"[{rid}] gen {stats.generation:4d}  evals {stats.evaluations:5d}  best {best}", file=sys.stderr)


def _print_summary(summary: dict) -> None:
    print(f"objective {summary['objective']}  budget {summary['budget']}  seeds {summary['seeds']}")
    for alg, entry in summary["algorithms"].items():
        med = entry["median_best_fitness"]
        q25, q75 = entry["iqr_best_fitness"]
        line = f"  {alg:7s} median best {med!s:>24}  IQR [{q25}, {q75}]"
        if entry.get("best_hp"):
            line += f"  best hp {entry['best_hp']}"
        if entry.get("metrics"):
            line += f"  test acc {entry['metrics']['accuracy']:.4f}"
        print(line)


def cmd_optimize(args) -> int:
    from .harness import load_config, run_campaign

    cfg = load_config(args.config)
    summary = run_campaign(cfg, args.out, workers=args.workers, progress=None if args.quiet else _progress)
    _print_summary(summary)
    return EXIT_OK


def cmd_resume(args) -> int:
    from .harness import resume_campaign

    summary = resume_campaign(args.out, workers=args.workers, progress=None if args.quiet else _progress)
    _print_summary(summary)
    return EXIT_OK


def cmd_bench(args) -> int:
    from .harness.config import ObjectiveConfig, RunConfig
    from .harness import run_campaign
    from . import optimizers
    from .objectives import benchmark

    algos = [a.strip() for a in args.algo.split(",") if a.strip()]
    cfg = RunConfig(algos, ObjectiveConfig(name=args.fn, dim=args.dim), args.budget, args.seeds)
    if args.out:
        _print_summary(run_campaign(cfg, args.out, progress=None))
        return EXIT_OK
    fn = benchmark(args.fn, args.dim)
    for alg in algos:
        bests = []
        for seed in cfg.seeds:
            res = optimizers.run(alg, fn, args.dim, cfg.algorithm_config(alg, seed), budget=args.budget, seed=seed)
            bests.append(res.best_fitness)
            print(f"{alg} seed {seed}: best {res.best_fitness:.6g} after {res.evaluations_used} evaluations")
        print(f"{alg} median best {float(np.median(bests)):.6g}")
    return EXIT_OK


def cmd_train(args) -> int:
    from .datagen import load_dataset, resize, split, Dataset
    from .metrics import confusion, render_confusion, report
    from .objectives import ViTObjectiveSpec, train_candidate
    from .searchspace import HyperParams
    from .vit.checkpoint import save_checkpoint
    from .vit.model import ViTConfig
    from .vit.train import predict_logits

    try:
        hp = HyperParams.parse(args.hp)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    data = load_dataset(args.data)
    preset = {"desk": ViTConfig.desk, "tiny": ViTConfig.tiny, "full": ViTConfig.full}[args.model]
    cfg = preset(image_size=args.image_size or data.image_size, channels=data.channels)
    if data.image_size != cfg.image_size:
        data = Dataset(np.stack([resize(im, cfg.image_size) for im in data.images]), data.labels, data.ids)
    train_set, test_set, val_set = split(data, seed=args.seed)
    spec = ViTObjectiveSpec(cfg, train_set, val_set, epoch_cap=hp.epochs, augment=args.augment)
    result = train_candidate(hp, spec, args.seed)
    if result.diverged:
        print(f"training diverged at epoch {result.epochs_run}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"validation accuracy {1.0 - result.fitness:.4f}")
    preds = np.argmax(predict_logits(result.model, test_set.images), axis=1)
    cm = confusion(preds, test_set.labels)
    rep = report(cm)
    print(f"test accuracy {rep.accuracy:.4f}  macro F1 {rep.macro_f1}")
    print(render_confusion(cm))
    if args.save:
        save_checkpoint(result.model, args.save)
    return EXIT_OK


def cmd_data_gen(args) -> int:
    from .datagen import SynthSpec, generate_synthetic, save_dataset

    try:
        spec = SynthSpec(args.n, args.size, args.difficulty, args.seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from None
    ds = generate_synthetic(spec)
    save_dataset(ds, args.out)
    print(f"wrote {len(ds)} samples ({args.size}x{args.size}) to {args.out}")
    return EXIT_OK


def cmd_data_inspect(args) -> int:
    from .datagen import load_dataset

    ds = load_dataset(args.file)
    info = {"samples": len(ds), "image_size": ds.image_size, "channels": ds.channels, "split": ds.split,
            "class_counts": ds.class_counts().tolist(),
            "pixel_min": float(ds.images.min()), "pixel_max": float(ds.images.max())}
    print(json.dumps(info, indent=2))
    return EXIT_OK


def cmd_report(args) -> int:
    from .harness import write_report

    for name, path in write_report(args.out).items():
        print(f"{name}: {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="metavit", description="Metaheuristic hyperparameter search for a small ViT.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    s = sub.add_parser("optimize", help="run a campaign from a TOML config")
    s.add_argument("--config", required=True)
    s.add_argument("--out")
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_optimize)

    s = sub.add_parser("resume", help="finish an interrupted campaign")
    s.add_argument("--out", required=True)
    s.add_argument("--workers", type=int, default=None)
    s.add_argument("--quiet", action="store_true")
    s.set_defaults(func=cmd_resume)

    s = sub.add_parser("bench", help="optimize a benchmark function")
    s.add_argument("--fn", required=True, choices=["sphere", "rastrigin", "rosenbrock"])
    s.add_argument("--algo", required=True, help="algorithm or comma separated list")
    s.add_argument("--dim", type=int, required=True)
    s.add_argument("--budget", type=int, required=True)
    s.add_argument("--seeds", type=_int_list, default=[0])
    s.add_argument("--out", help="persist as a campaign in this directory")
    s.set_defaults(func=cmd_bench)

    s = sub.add_parser("train", help="train one model with fixed hyperparameters")
    s.add_argument("--hp", required=True, help="e.g. B=8,E=50,lr=1e-3,dropout=0.1")
    s.add_argument("--data", required=True)
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--model", choices=["desk", "tiny", "full"], default="desk")
    s.add_argument("--image-size", type=int, default=None)
    s.add_argument("--augment", action="store_true")
    s.add_argument("--save", help="write the trained model checkpoint here")
    s.set_defaults(func=cmd_train)

    s = sub.add_parser("data", help="synthetic dataset files")
    dsub = s.add_subparsers(dest="data_command", required=True)
    g = dsub.add_parser("gen")
    g.add_argument("--n", type=int, default=600)
    g.add_argument("--size", type=int, default=32)
    g.add_argument("--difficulty", type=float, default=0.3)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_data_gen)
    i = dsub.add_parser("inspect")
    i.add_argument("file")
    i.set_defaults(func=cmd_data_inspect)

    s = sub.add_parser("report", help="render tables from a finished campaign")
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_report)
    return p


def main(argv=None) -> int:
    from .datagen import DatasetFormatError
    from .harness import ConfigError, PartialCampaignError
    from .optimizers.base import ConfigError as OptimizerConfigError

    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        return args.func(args)
    except (ConfigError, OptimizerConfigError, UsageError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FileNotFoundError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (PartialCampaignError, DatasetFormatError, OSError, ArithmeticError, RuntimeError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
