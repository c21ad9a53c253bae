"""Render campaign artifacts from persisted state only."""
from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from ..metrics import ConfusionMatrix, confusion_csv, render_confusion
from .campaign import PartialCampaignError, completed_runs, summarize
from .config import load_snapshot

HP_HEADER = ["algorithm", "batch_size", "epochs", "input_size", "dropout", "learning_rate"]
METRICS_HEADER = ["algorithm", "accuracy", "macro_recall", "macro_precision", "macro_f1"]


def _fmt(v) -> str:
    return "" if v is None else repr(float(v))


def _write_csv(path: Path, header, rows) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def write_report(out_dir) -> dict[str, Path]:
    """Write the hyperparameter table, metrics table, confusion matrices and
    convergence curves into ``out_dir``; return the written paths by name.

    Raises :class:`PartialCampaignError` unless every run has completed.
    """
    out = Path(out_dir)
    cfg = load_snapshot(out)
    if not (out / "summary.json").exists():
        raise PartialCampaignError(f"{out} has no summary.json; the campaign has not finished")
    summary = summarize(cfg, out)
    runs = completed_runs(out)
    written: dict[str, Path] = {}

    if cfg.objective.name == "vit":
        size = cfg.objective.vit_config().image_size
        rows = []
        for alg, entry in summary["algorithms"].items():
            hp = entry["best_hp"] or {}
            rows.append([alg, hp.get("batch_size", ""), hp.get("epochs", ""), size,
                         _fmt(hp.get("dropout")), _fmt(hp.get("learning_rate"))])
        written["hyperparameters"] = out / "table_hyperparameters.csv"
        _write_csv(written["hyperparameters"], HP_HEADER, rows)

        rows = []
        for alg, entry in summary["algorithms"].items():
            m = entry.get("metrics")
            if m is None:
                continue
            rows.append([alg, _fmt(m["accuracy"]), _fmt(m["macro_recall"]),
                         _fmt(m["macro_precision"]), _fmt(m["macro_f1"])])
            cm = ConfusionMatrix(np.array(entry["pooled_confusion"]))
            written[f"confusion_{alg}_txt"] = out / f"confusion_{alg}.txt"
            written[f"confusion_{alg}_txt"].write_text(render_confusion(cm))
            written[f"confusion_{alg}_csv"] = out / f"confusion_{alg}.csv"
            written[f"confusion_{alg}_csv"].write_text(confusion_csv(cm))
        written["metrics"] = out / "table_metrics.csv"
        _write_csv(written["metrics"], METRICS_HEADER, rows)
    else:
        rows = []
        for alg, entry in summary["algorithms"].items():
            q25, q75 = entry["iqr_best_fitness"]
            rows.append([alg, _fmt(entry["median_best_fitness"]), _fmt(q25), _fmt(q75),
                         " ".join(_fmt(g) for g in entry["best_genes"] or [])])
        written["best"] = out / "table_best.csv"
        _write_csv(written["best"], ["algorithm", "median_best_fitness", "q25", "q75", "best_genes"], rows)

    for alg in cfg.algorithms:
        rows = []
        for seed in cfg.seeds:
            rec = runs[f"{alg}-s{seed}"]
            for gen, best, mean, evals in rec["history"]:
                rows.append([seed, gen, evals, _fmt(best), _fmt(mean)])
        written[f"convergence_{alg}"] = out / f"convergence_{alg}.csv"
        _write_csv(written[f"convergence_{alg}"], ["seed", "generation", "evaluations", "best", "mean"], rows)
    return written


def read_metrics_table(path) -> dict[str, dict[str, float]]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    return {r["algorithm"]: {k: float(v) if v else None for k, v in r.items() if k != "algorithm"} for r in rows}
