import csv
import json
import math
import os
import shutil

import numpy as np
import pytest

from metavit.harness import (ConfigError, PartialCampaignError, TrialLog, from_dict, load_config, resume_campaign,
                             run_campaign, strip_wall_time, write_report)
from metavit.harness.report import read_metrics_table
from metavit.metrics import parse_confusion_csv, report


def bench_doc(**campaign):
    doc = {"campaign": {"algorithms": ["de", "random"], "budget": 60, "seeds": [1, 2, 3, 4, 5]},
           "objective": {"name": "sphere", "dim": 3},
           "algorithm": {"de": {"pop_size": 6}}}
    doc["campaign"].update(campaign)
    return doc


VIT_DOC = {
    "campaign": {"algorithms": ["de", "ga"], "budget": 6, "seeds": [1, 2]},
    "objective": {"name": "vit", "epoch_cap": 2,
                  "data": {"n_samples": 60, "image_size": 8, "difficulty": 0.4, "seed": 0},
                  "model": {"image_size": 8, "patch_size": 4, "embed_dim": 8, "num_layers": 1, "num_heads": 2,
                            "head_dim": 4, "mlp_hidden": 16}},
    "algorithm": {"de": {"pop_size": 4}, "ga": {"pop_size": 3, "elitism_count": 1}},
}


class Interrupt(Exception):
    pass


def killer(run, generation):
    def progress(rid, stats):
        if rid == run and stats.generation == generation:
            raise Interrupt(rid)
    return progress


# ---- configuration ------------------------------------------------------

def test_toml_roundtrip(tmp_path):
    path = tmp_path / "c.toml"
    path.write_text("""
[campaign]
algorithms = ["de", "pso"]
budget = 100
seeds = [1, 2]

[objective]
name = "vit"
epoch_cap = 5

[objective.data]
n_samples = 30

[space]
batch_size = { kind = "integer", low = 4, high = 16 }
epochs = { kind = "integer", low = 10, high = 20 }
learning_rate = { kind = "log-continuous", low = 1e-4, high = 1e-2 }
dropout = { fixed = 0.2 }

[algorithm.pso]
swarm_size = 10
""")
    cfg = load_config(path)
    assert cfg.algorithms == ["de", "pso"] and cfg.budget == 100 and cfg.dim == 3
    assert cfg.space.fixed == {"dropout": 0.2} and cfg.algorithm_config("pso", 4).swarm_size == 10
    assert cfg.algorithm_config("pso", 4).seed == 4


@pytest.mark.parametrize("mutate,match", [
    (lambda d: d["campaign"].update(budjet=3), "budjet"),
    (lambda d: d["objective"].update(name="ackley"), "objective"),
    (lambda d: d["campaign"].update(algorithms=["sa"]), "algorithm"),
    (lambda d: d["campaign"].update(seeds=[]), "seed"),
    (lambda d: d["campaign"].update(budget=5), "population"),
    (lambda d: d["algorithm"]["de"].update(popsize=4), "popsize"),
    (lambda d: d["algorithm"]["de"].update(pop_size=3), "de"),
    (lambda d: d.update(extra={}), "extra"),
    (lambda d: d["campaign"].update(seeds=[1, 1]), "duplicate"),
])
def test_config_errors(mutate, match):
    doc = bench_doc()
    mutate(doc)
    with pytest.raises(ConfigError, match=match):
        from_dict(doc)


def test_unknown_model_key():
    doc = json.loads(json.dumps(VIT_DOC))
    doc["objective"]["model"]["depth"] = 3
    with pytest.raises(ConfigError, match="depth"):
        from_dict(doc)


def test_unwritable_output(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(ConfigError):
        run_campaign(from_dict(bench_doc()), blocker / "out")


def test_refuses_existing_campaign(tmp_path):
    cfg = from_dict(bench_doc(seeds=[1]))
    run_campaign(cfg, tmp_path / "a")
    with pytest.raises(ConfigError, match="resume"):
        run_campaign(cfg, tmp_path / "a")


# ---- campaign contracts -------------------------------------------------

def test_budget_one_single_record(tmp_path):
    cfg = from_dict({"campaign": {"algorithm": "random", "budget": 1, "seeds": [7]},
                     "objective": {"name": "rastrigin", "dim": 2}})
    run_campaign(cfg, tmp_path / "r")
    assert len(TrialLog(tmp_path / "r" / "trials.jsonl").read()) == 1


def test_summary_shape_and_reconciliation(tmp_path):
    summary = run_campaign(from_dict(bench_doc()), tmp_path / "c")
    records = TrialLog(tmp_path / "c" / "trials.jsonl").read()
    for alg, entry in summary["algorithms"].items():
        assert len(entry["per_seed"]) == 5
        fits = [s["best_fitness"] for s in entry["per_seed"]]
        assert entry["median_best_fitness"] == float(np.median(fits))
        for s in entry["per_seed"]:
            mine = [r for r in records if r.run_id == f"{alg}-s{s['seed']}"]
            assert len(mine) == s["evaluations_used"] == 60
            assert s["best_fitness"] == min(r.fitness for r in mine)
            keys = [(r.generation, r.slot) for r in mine]
            assert keys == sorted(keys) and len(set(keys)) == len(keys)
    assert len(records) == 2 * 5 * 60


def test_rerun_is_byte_identical(tmp_path):
    cfg = from_dict(bench_doc())
    run_campaign(cfg, tmp_path / "a")
    run_campaign(cfg, tmp_path / "b")
    a = (tmp_path / "a" / "trials.jsonl").read_text()
    b = (tmp_path / "b" / "trials.jsonl").read_text()
    assert a != b  # wall times differ
    assert strip_wall_time(a) == strip_wall_time(b)
    assert (tmp_path / "a" / "summary.json").read_bytes() == (tmp_path / "b" / "summary.json").read_bytes()


def test_resume_after_completion_is_noop(tmp_path):
    out = tmp_path / "c"
    first = run_campaign(from_dict(bench_doc()), out)
    before = (out / "trials.jsonl").read_bytes()
    assert resume_campaign(out) == first
    assert (out / "trials.jsonl").read_bytes() == before


def test_interrupt_and_resume(tmp_path):
    cfg = from_dict(bench_doc(algorithms=["de"]))
    reference = run_campaign(cfg, tmp_path / "ref")
    out = tmp_path / "cut"
    with pytest.raises(Interrupt):
        run_campaign(cfg, out, progress=killer("de-s3", 2))
    assert sorted(p.name for p in (out / "runs").glob("*.json")) == ["de-s1.json", "de-s2.json"]
    with pytest.raises(PartialCampaignError):
        write_report(out)
    kept = {p.name: p.read_bytes() for p in (out / "runs").glob("*.json")}
    partial = TrialLog(out / "trials.jsonl").read()
    assert {r.run_id for r in partial} == {"de-s1", "de-s2", "de-s3"}

    summary = resume_campaign(out)
    assert summary == reference
    for name, blob in kept.items():
        assert (out / "runs" / name).read_bytes() == blob
    assert strip_wall_time((out / "trials.jsonl").read_text()) == \
        strip_wall_time((tmp_path / "ref" / "trials.jsonl").read_text())


def test_resume_tolerates_torn_line(tmp_path):
    cfg = from_dict(bench_doc(algorithms=["random"], seeds=[1, 2]))
    reference = run_campaign(cfg, tmp_path / "ref")
    out = tmp_path / "cut"
    with pytest.raises(Interrupt):
        run_campaign(cfg, out, progress=killer("random-s2", 10))
    with open(out / "trials.jsonl", "a") as fh:
        fh.write('{"run_id": "random-s2", "gen')
    assert resume_campaign(out) == reference


def test_resume_needs_snapshot(tmp_path):
    with pytest.raises(ConfigError):
        resume_campaign(tmp_path)
    (tmp_path / "config.json").write_text("{not json")
    with pytest.raises(ConfigError):
        resume_campaign(tmp_path)


# ---- ViT campaign and reports -------------------------------------------

@pytest.fixture(scope="module")
def vit_campaign(tmp_path_factory):
    out = tmp_path_factory.mktemp("vit") / "camp"
    summary = run_campaign(from_dict(VIT_DOC), out)
    return out, summary


def test_vit_run_records(vit_campaign):
    out, summary = vit_campaign
    records = TrialLog(out / "trials.jsonl").read()
    assert len(records) == 2 * 2 * 6
    for r in records:
        assert r.status in ("ok", "diverged")
        assert r.status != "ok" or math.isfinite(r.fitness)
        assert set(r.hp) == {"batch_size", "epochs", "learning_rate", "dropout"}
    for alg in ("de", "ga"):
        for seed in (1, 2):
            rec = json.loads((out / "runs" / f"{alg}-s{seed}.json").read_text())
            assert sum(map(sum, rec["test"]["confusion"])) == 12  # 20% of 60
            assert (out / "runs" / f"{alg}-s{seed}.svit").exists()


def test_report_tables(vit_campaign):
    out, summary = vit_campaign
    written = write_report(out)
    with open(written["hyperparameters"]) as fh:
        rows = list(csv.DictReader(fh))
    assert [r["algorithm"] for r in rows] == ["de", "ga"]
    for r in rows:
        assert r["batch_size"].isdigit() and r["epochs"].isdigit() and r["input_size"] == "8"
        assert 1e-5 <= float(r["learning_rate"]) <= 1e-2 and float(r["dropout"]) == 0.1
    metrics = read_metrics_table(written["metrics"])
    assert list(metrics) == ["de", "ga"]
    for alg, row in metrics.items():
        cm = parse_confusion_csv((out / f"confusion_{alg}.csv").read_text())
        rep = report(cm)
        for key in ("accuracy", "macro_recall", "macro_precision", "macro_f1"):
            want = getattr(rep, key)
            assert abs(row[key] - want) <= 1e-12
            assert abs(summary["algorithms"][alg]["metrics"][key] - want) <= 1e-12
    with open(out / "convergence_de.csv") as fh:
        conv = list(csv.DictReader(fh))
    assert {r["seed"] for r in conv} == {"1", "2"}
    for seed in ("1", "2"):
        best = [float(r["best"]) for r in conv if r["seed"] == seed]
        assert best == sorted(best, reverse=True)


def test_report_is_pure(vit_campaign, tmp_path):
    out, _ = vit_campaign
    first = {k: p.read_bytes() for k, p in write_report(out).items()}
    copy = tmp_path / "copy"
    shutil.copytree(out, copy)
    for p in copy.glob("*.csv"):
        p.unlink()
    for p in copy.glob("*.txt"):
        p.unlink()
    again = {k: p.read_bytes() for k, p in write_report(copy).items()}
    assert again == first


def test_report_benchmark_campaign(tmp_path):
    out = tmp_path / "b"
    run_campaign(from_dict(bench_doc(seeds=[1, 2])), out)
    written = write_report(out)
    assert "best" in written and "metrics" not in written
    with open(written["best"]) as fh:
        assert [r["algorithm"] for r in csv.DictReader(fh)] == ["de", "random"]


def test_executor_campaign_matches_serial(tmp_path):
    cfg = from_dict(bench_doc(seeds=[1]))
    a = run_campaign(cfg, tmp_path / "a")
    b = run_campaign(cfg, tmp_path / "b", workers=2)
    assert a == b
    assert strip_wall_time((tmp_path / "a" / "trials.jsonl").read_text()) == \
        strip_wall_time((tmp_path / "b" / "trials.jsonl").read_text())
