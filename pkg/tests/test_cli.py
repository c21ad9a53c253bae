import json

import pytest

from metavit.cli import EXIT_CONFIG, EXIT_OK, EXIT_RUNTIME, main

CONFIG = """
[campaign]
algorithms = ["pso", "random"]
budget = 30
seeds = [1, 2]

[objective]
name = "rastrigin"
dim = 2

[algorithm.pso]
swarm_size = 5
"""


def test_optimize_report_resume(tmp_path, capsys):
    cfg = tmp_path / "c.toml"
    cfg.write_text(CONFIG)
    out = tmp_path / "out"
    assert main(["optimize", "--config", str(cfg), "--out", str(out), "--quiet"]) == EXIT_OK
    assert "pso" in capsys.readouterr().out
    assert main(["resume", "--out", str(out), "--quiet"]) == EXIT_OK
    assert main(["report", "--out", str(out)]) == EXIT_OK
    assert (out / "table_best.csv").exists() and (out / "convergence_pso.csv").exists()
    assert main(["optimize", "--config", str(cfg), "--out", str(out)]) == EXIT_CONFIG


def test_bench(capsys):
    assert main(["bench", "--fn", "sphere", "--algo", "de,random", "--dim", "2", "--budget", "40",
                 "--seeds", "1,2"]) == EXIT_OK
    text = capsys.readouterr().out
    assert "de median best" in text and "random median best" in text


@pytest.mark.parametrize("argv", [
    ["bench", "--fn", "ackley", "--algo", "de", "--dim", "2", "--budget", "40"],
    ["bench", "--fn", "sphere", "--algo", "de", "--dim", "2", "--budget", "5"],
    ["bench", "--fn", "sphere", "--algo", "sa", "--dim", "2", "--budget", "50"],
    ["optimize", "--config", "/nonexistent.toml"],
    ["resume", "--out", "/nonexistent-dir"],
    ["train", "--hp", "B=8,E=2", "--data", "x.svds"],
    ["frobnicate"],
])
def test_config_errors_exit_one(argv):
    assert main(argv) == EXIT_CONFIG


def test_data_and_train(tmp_path, capsys):
    data = tmp_path / "d.svds"
    assert main(["data", "gen", "--n", "45", "--size", "8", "--difficulty", "0.2", "--seed", "3",
                 "--out", str(data)]) == EXIT_OK
    assert main(["data", "inspect", str(data)]) == EXIT_OK
    info = json.loads(capsys.readouterr().out.split("\n", 1)[1])
    assert info["samples"] == 45 and info["class_counts"] == [15, 15, 15]
    ckpt = tmp_path / "m.svit"
    assert main(["train", "--hp", "B=8,E=2,lr=1e-3,dropout=0.1", "--data", str(data), "--model", "tiny",
                 "--save", str(ckpt)]) == EXIT_OK
    assert "validation accuracy" in capsys.readouterr().out and ckpt.exists()


def test_runtime_errors_exit_two(tmp_path):
    bad = tmp_path / "bad.svds"
    bad.write_bytes(b"JUNK" + bytes(20))
    assert main(["data", "inspect", str(bad)]) == EXIT_RUNTIME
    cfg = tmp_path / "c.toml"
    cfg.write_text(CONFIG)
    out = tmp_path / "o"
    main(["optimize", "--config", str(cfg), "--out", str(out), "--quiet"])
    (out / "runs" / "pso-s2.json").unlink()
    assert main(["report", "--out", str(out)]) == EXIT_RUNTIME
