"""CLI: config handling, subcommands, exit codes."""

import json
import subprocess
import sys
from pathlib import Path

import pytest

from editforge.cli import main
from editforge.config import ConfigError, load_config
from conftest import RepoBuilder, write_seed_file


@pytest.fixture
def workdir(tmp_path, monkeypatch):
    monkeypatch.chdir(tmp_path)
    write_seed_file(tmp_path / "seeds.jsonl")
    (tmp_path / "config.yaml").write_text(
        "rng_seed: 3\n"
        "paths:\n"
        "  seed_pool: seeds.jsonl\n"
        "  corpus: out/corpus.jsonl\n"
        "  splits: out/splits.json\n"
        "  stats: out/stats.json\n"
        "  report: out/report.json\n"
        "  state_dir: state\n",
        encoding="utf-8",
    )
    return tmp_path


# ---------------------------------------------------------------------------
# Config
# ---------------------------------------------------------------------------

def test_defaults_load_and_validate():
    config = load_config(None)
    assert config.thresholds.rouge_dup == 0.7
    assert config.thresholds.jaccard_dup == 0.75
    assert config.thresholds.min_stars == 100
    assert config.thresholds.max_edited_rows == 100
    assert config.thresholds.max_tokens == 1024
    assert config.sampling.seeds_per_prompt == 7
    assert config.sampling.generated_per_prompt == 1
    assert config.sampling.scenarios_per_instruction == 10
    assert len(config.intent_labels) == 27


def test_unknown_key_rejected(tmp_path):
    path = tmp_path / "bad.yaml"
    path.write_text("thresholds:\n  rouge_cup: 0.5\n")
    with pytest.raises(ConfigError, match="rouge_cup"):
        load_config(path)


def test_override_validation(tmp_path):
    with pytest.raises(ConfigError):
        load_config(None, {"thresholds.rouge_dup": "1.5"})
    with pytest.raises(ConfigError):
        load_config(None, {"sampling.seeds_per_prompt": "0", "sampling.generated_per_prompt": "1"})


def test_dotted_override_coercion():
    config = load_config(None, {"thresholds.min_stars": "42", "llm.backend": "http"})
    assert config.thresholds.min_stars == 42
    assert config.llm.backend == "http"


# ---------------------------------------------------------------------------
# Subcommands (in-process)
# ---------------------------------------------------------------------------

def test_run_then_split_export_analyze(workdir, capsys):
    assert main(["run", "--config", "config.yaml", "--target", "20"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["pool_size_end"] == 20

    assert main(["split", "--config", "config.yaml"]) == 0
    sizes = json.loads(capsys.readouterr().out)
    assert sizes["train"] + sizes["validation"] + sizes["test"] == 20

    assert main(["export", "--config", "config.yaml"]) == 0
    assert json.loads(capsys.readouterr().out)["exported"] == 20

    assert main(["analyze", "--config", "config.yaml"]) == 0
    stats = json.loads(capsys.readouterr().out)
    assert stats["count"] == 20
    assert Path("out/stats.json").exists()


def test_flag_override_beats_config(workdir, capsys):
    # Tiny round budget stops generation after one round.
    assert main(["run", "--config", "config.yaml", "--target", "500", "--round-budget", "1"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["rounds_run"] == 1


def test_set_override(workdir, capsys):
    assert (
        main(["run", "--config", "config.yaml", "--target", "500", "--set", "round_budget=1"]) == 0
    )
    assert json.loads(capsys.readouterr().out)["rounds_run"] == 1


def test_bootstrap_then_generate(workdir, capsys):
    assert main(["bootstrap", "--config", "config.yaml", "--rounds", "2"]) == 0
    boot = json.loads(capsys.readouterr().out)
    assert boot["admitted"] > 0

    assert main(["generate", "--config", "config.yaml"]) == 0
    gen = json.loads(capsys.readouterr().out)
    assert gen["instances_admitted"] > 0
    corpus_size = gen["instances_admitted"] + 10

    assert main(["export", "--config", "config.yaml"]) == 0
    assert json.loads(capsys.readouterr().out)["exported"] == corpus_size


def test_mine_subcommand(workdir, capsys):
    repo = RepoBuilder(workdir / "repo")
    repo.sidecar(stars=500, license_id="MIT")
    repo.commit("seed the module", {"mod.py": "x = 1\n"})
    repo.commit("rename x to count for clarity", {"mod.py": "count = 1\n"})
    assert main(["mine", "--config", "config.yaml", "--repo", "repo", "--out", "mined.jsonl"]) == 0
    summary = json.loads(capsys.readouterr().out)
    assert summary["kept"] >= 1
    lines = [json.loads(l) for l in Path("mined.jsonl").read_text().splitlines()]
    assert all(obj["source"] == "github_seed" for obj in lines)


def test_judge_subcommand(workdir, capsys):
    assert main(["run", "--config", "config.yaml", "--target", "15"]) == 0
    capsys.readouterr()
    corpus = [json.loads(l) for l in Path("out/corpus.jsonl").read_text().splitlines()]
    with open("eval.jsonl", "w") as handle:
        for obj in corpus[:6]:
            handle.write(
                json.dumps(
                    {
                        "sample_id": obj["id"],
                        "instruction": obj["instruction"],
                        "input": obj["input"],
                        "model_output": obj["output"],
                        "model_tag": "m1",
                    }
                )
                + "\n"
            )
    assert main(["judge", "--config", "config.yaml", "--eval-file", "eval.jsonl",
                 "--out", "out/eval.json"]) == 0
    table = capsys.readouterr().out
    assert "overall accuracy" in table
    report = json.loads(Path("out/eval.json").read_text())
    assert report["judged_count"] == 6


# ---------------------------------------------------------------------------
# Exit codes
# ---------------------------------------------------------------------------

def test_config_error_exit_code(workdir, capsys):
    (workdir / "bad.yaml").write_text("thresholds:\n  rouge_dup: 2.0\n")
    assert main(["run", "--config", "bad.yaml", "--target", "5"]) == 2
    err = capsys.readouterr().err
    assert json.loads(err.splitlines()[-1])["error"] == "config"


def test_input_error_exit_code(workdir, capsys):
    assert main(["judge", "--config", "config.yaml", "--eval-file", "missing.jsonl"]) == 3
    err = capsys.readouterr().err
    assert json.loads(err.splitlines()[-1])["error"] == "input"


def test_console_script_entrypoint(workdir):
    result = subprocess.run(
        [sys.executable, "-m", "editforge.cli", "run", "--config", "config.yaml", "--target", "12"],
        capture_output=True,
        text=True,
    )
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout)["pool_size_end"] == 12
