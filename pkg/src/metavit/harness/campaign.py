"""Campaign orchestration: optimizers x seeds against one objective.

Output directory layout::

    config.json          normalized config snapshot
    trials.jsonl         one TrialRecord per objective evaluation
    runs/<run>.json      completed run: best candidate, history, test metrics
    runs/<run>.svit      retrained best model (ViT objective only)
    summary.json         aggregate over runs, rebuilt from runs/*.json

A run is ``(algorithm, seed)``; its id is ``"<algorithm>-s<seed>"``.  A run
counts as complete once its ``runs/<run>.json`` exists, so resuming skips
completed runs and restarts an interrupted one from scratch.
"""
from __future__ import annotations

import json
import logging
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional

import numpy as np

from .. import optimizers
from ..datagen import Dataset, SynthSpec, generate_synthetic, load_dataset, resize, split
from ..metrics import ConfusionMatrix, confusion, report
from ..objectives import ViTObjective, ViTObjectiveSpec, benchmark, train_candidate
from ..optimizers.base import Trial, derive_seed
from ..searchspace import decode
from ..vit.checkpoint import save_checkpoint
from ..vit.train import predict_logits
from .config import ConfigError, RunConfig, load_snapshot
from .trials import TrialLog, TrialRecord

logger = logging.getLogger(__name__)

FINAL_EVAL_GENERATION = -1


class PartialCampaignError(RuntimeError):
    """The output directory does not hold a finished campaign."""


def run_id(algorithm: str, seed: int) -> str:
    return f"{algorithm}-s{seed}"


def _write_json(path: Path, obj) -> None:
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(obj, indent=2, sort_keys=True, allow_nan=False) + "\n")
    os.replace(tmp, path)


def _finite_or_none(x):
    return float(x) if x is not None and math.isfinite(x) else None


def load_base_dataset(cfg: RunConfig) -> Dataset:
    data = cfg.objective.data
    if data.file:
        ds = load_dataset(data.file)
    else:
        ds = generate_synthetic(SynthSpec(data.n_samples, data.image_size, data.difficulty, data.seed))
    size = cfg.objective.vit_config().image_size
    if ds.image_size != size:
        images = np.stack([resize(img, size) for img in ds.images])
        ds = Dataset(images, ds.labels, ds.ids, ds.split)
    return ds


@dataclass
class SeedContext:
    objective: object
    train: Optional[Dataset] = None
    test: Optional[Dataset] = None
    validation: Optional[Dataset] = None
    spec: Optional[ViTObjectiveSpec] = None


def seed_context(cfg: RunConfig, seed: int, base: Optional[Dataset]) -> SeedContext:
    if cfg.objective.name != "vit":
        return SeedContext(benchmark(cfg.objective.name, cfg.objective.dim))
    train, test, validation = split(base, seed=seed)
    spec = ViTObjectiveSpec(cfg.objective.vit_config(), train, validation,
                            cfg.objective.epoch_cap, cfg.objective.augment)
    return SeedContext(ViTObjective(spec, cfg.space), train, test, validation, spec)


def _execute_run(cfg: RunConfig, algorithm: str, seed: int, ctx: SeedContext, log: TrialLog,
                 out: Path, executor=None, progress: Optional[Callable] = None) -> dict:
    rid = run_id(algorithm, seed)
    is_vit = cfg.objective.name == "vit"

    def on_trial(t: Trial) -> None:
        hp = decode(cfg.space, t.genes).as_dict() if is_vit else None
        log.append(TrialRecord(rid, algorithm, seed, t.generation, t.slot, [float(g) for g in t.genes],
                               hp, _finite_or_none(t.fitness), t.status, t.eval_seed, t.wall_time))

    def on_generation(stats) -> None:
        if progress is not None:
            progress(rid, stats)

    result = optimizers.run(algorithm, ctx.objective, cfg.dim, cfg.algorithm_config(algorithm, seed),
                            budget=cfg.budget, seed=seed, on_trial=on_trial, callback=on_generation,
                            executor=executor)
    record = {
        "run_id": rid, "algorithm": algorithm, "seed": seed,
        "best_fitness": _finite_or_none(result.best_fitness),
        "best_genes": [float(g) for g in result.best_genes] if np.all(np.isfinite(result.best_genes)) else None,
        "best_hp": None,
        "evaluations_used": result.evaluations_used,
        "failures": result.failures,
        "history": [[h.generation, _finite_or_none(h.best), _finite_or_none(h.mean), h.evaluations]
                    for h in result.history],
        "test": None,
    }
    if is_vit and record["best_genes"] is not None:
        hp = decode(cfg.space, result.best_genes)
        record["best_hp"] = hp.as_dict()
        final = train_candidate(hp, ctx.spec, derive_seed(seed, FINAL_EVAL_GENERATION, 0))
        if final.model is not None:
            preds = np.argmax(predict_logits(final.model, ctx.test.images), axis=1)
            cm = confusion(preds, ctx.test.labels)
            rep = report(cm)
            record["test"] = {"confusion": cm.to_list(), "accuracy": rep.accuracy,
                              "validation_fitness": final.fitness, "epochs_run": final.epochs_run}
            save_checkpoint(final.model, out / "runs" / f"{rid}.svit")
        else:
            record["test"] = {"confusion": None, "accuracy": None, "validation_fitness": final.fitness,
                              "epochs_run": final.epochs_run}
    _write_json(out / "runs" / f"{rid}.json", record)
    return record


def completed_runs(out: Path) -> dict[str, dict]:
    done = {}
    runs = out / "runs"
    if not runs.is_dir():
        return done
    for path in sorted(runs.glob("*.json")):
        try:
            rec = json.loads(path.read_text())
        except ValueError:
            continue
        done[rec["run_id"]] = rec
    return done


def summarize(cfg: RunConfig, out: Path) -> dict:
    """Aggregate the persisted run records into the campaign summary."""
    done = completed_runs(out)
    summary = {"objective": cfg.objective.name, "budget": cfg.budget, "seeds": list(cfg.seeds),
               "algorithms": {}}
    for alg in cfg.algorithms:
        recs = [done[run_id(alg, s)] for s in cfg.seeds if run_id(alg, s) in done]
        if len(recs) != len(cfg.seeds):
            raise PartialCampaignError(f"{alg}: {len(recs)} of {len(cfg.seeds)} seeds complete")
        fits = [r["best_fitness"] if r["best_fitness"] is not None else math.inf for r in recs]
        arr = np.array(fits)
        best_i = int(np.argmin(arr))
        entry = {
            "per_seed": [{"seed": r["seed"], "best_fitness": r["best_fitness"], "best_hp": r["best_hp"],
                          "best_genes": r["best_genes"], "evaluations_used": r["evaluations_used"],
                          "test_accuracy": (r["test"] or {}).get("accuracy")} for r in recs],
            "median_best_fitness": _finite_or_none(float(np.median(arr))),
            "iqr_best_fitness": [_finite_or_none(float(q)) for q in np.percentile(arr, [25, 75])],
            "best_seed": recs[best_i]["seed"],
            "best_hp": recs[best_i]["best_hp"],
            "best_genes": recs[best_i]["best_genes"],
        }
        cms = [r["test"]["confusion"] for r in recs if r.get("test") and r["test"].get("confusion")]
        if cms:
            pooled = np.sum(np.array(cms), axis=0)
            rep = report(ConfusionMatrix(pooled))
            entry["pooled_confusion"] = pooled.tolist()
            entry["metrics"] = {"accuracy": rep.accuracy, "macro_recall": rep.macro_recall,
                                "macro_precision": rep.macro_precision, "macro_f1": rep.macro_f1}
        summary["algorithms"][alg] = entry
    return summary


def _prepare_output(out: Path) -> None:
    try:
        (out / "runs").mkdir(parents=True, exist_ok=True)
        probe = out / ".write-probe"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory {out} is not writable: {exc}") from None


def _execute(cfg: RunConfig, out: Path, workers: Optional[int], progress) -> dict:
    log = TrialLog(out / "trials.jsonl")
    done = completed_runs(out)
    dropped = log.keep_runs(done) if log.path.exists() else 0
    if dropped:
        logger.info("discarded %d trial records from interrupted runs", dropped)
    base = load_base_dataset(cfg) if cfg.objective.name == "vit" else None
    executor = ProcessPoolExecutor(workers) if workers and workers > 1 else None
    try:
        for alg in cfg.algorithms:
            for seed in cfg.seeds:
                if run_id(alg, seed) in done:
                    continue
                ctx = seed_context(cfg, seed, base)
                _execute_run(cfg, alg, seed, ctx, log, out, executor, progress)
    finally:
        if executor is not None:
            executor.shutdown()
    summary = summarize(cfg, out)
    _write_json(out / "summary.json", summary)
    return summary


def run_campaign(cfg: RunConfig, out_dir=None, workers: Optional[int] = None,
                 progress: Optional[Callable] = None) -> dict:
    """Run every ``(algorithm, seed)`` pair to budget and write the summary.

    Fails with :class:`ConfigError` before any evaluation when the output
    directory is unusable or already holds a campaign.
    """
    out = Path(out_dir or cfg.output or "")
    if not str(out_dir or cfg.output or ""):
        raise ConfigError("no output directory given")
    if (out / "trials.jsonl").exists() or (out / "config.json").exists():
        raise ConfigError(f"{out} already holds a campaign; use resume")
    _prepare_output(out)
    if cfg.objective.name == "vit" and cfg.objective.data.file and not Path(cfg.objective.data.file).exists():
        raise ConfigError(f"dataset file {cfg.objective.data.file} not found")
    (out / "config.json").write_text(cfg.to_json() + "\n")
    (out / "trials.jsonl").touch()
    return _execute(cfg, out, workers, progress)


def resume_campaign(out_dir, workers: Optional[int] = None, progress: Optional[Callable] = None) -> dict:
    """Finish an interrupted campaign; completed runs are not re-evaluated."""
    out = Path(out_dir)
    cfg = load_snapshot(out)
    _prepare_output(out)
    return _execute(cfg, out, workers, progress)
