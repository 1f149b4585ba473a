"""Pipeline loop: determinism, resume, reporting."""

import json
from pathlib import Path

import pytest

from editforge.config import PipelineConfig, load_config
from editforge.pipeline import (
    load_or_seed_pool,
    run_pipeline,
    save_state,
)
from conftest import write_seed_file


def make_config(tmp_path: Path, **kwargs) -> PipelineConfig:
    config = load_config(None)
    config.rng_seed = kwargs.pop("rng_seed", 11)
    config.paths.seed_pool = str(tmp_path / "seeds.jsonl")
    config.paths.corpus = str(tmp_path / "out" / "corpus.jsonl")
    config.paths.splits = str(tmp_path / "out" / "splits.json")
    config.paths.stats = str(tmp_path / "out" / "stats.json")
    config.paths.report = str(tmp_path / "out" / "report.json")
    config.paths.state_dir = str(tmp_path / "state")
    for key, value in kwargs.items():
        setattr(config, key, value)
    return config


@pytest.fixture
def configured(tmp_path):
    write_seed_file(tmp_path / "seeds.jsonl")
    return make_config(tmp_path)


def out_bytes(config: PipelineConfig) -> dict[str, bytes]:
    return {
        name: Path(getattr(config.paths, name)).read_bytes()
        for name in ("corpus", "splits", "stats")
    }


def wipe(config: PipelineConfig) -> None:
    import shutil

    shutil.rmtree(config.paths.state_dir, ignore_errors=True)
    shutil.rmtree(Path(config.paths.corpus).parent, ignore_errors=True)


def test_run_reaches_target_and_reports(configured):
    report = run_pipeline(configured, target_count=30)
    assert report.pool_size_end == 30
    assert report.instances_admitted + sum(report.instance_rejections.values()) == (
        report.instance_candidates
    )
    assert report.instructions_admitted + sum(report.instruction_rejections.values()) == (
        report.instruction_candidates
    )
    corpus_lines = Path(configured.paths.corpus).read_text().splitlines()
    assert len(corpus_lines) == 30
    report_obj = json.loads(Path(configured.paths.report).read_text())
    assert report_obj["pool_size_end"] == 30


def test_two_runs_byte_identical(configured):
    run_pipeline(configured, target_count=25)
    first = out_bytes(configured)
    wipe(configured)
    run_pipeline(configured, target_count=25)
    assert out_bytes(configured) == first


def test_different_seed_changes_corpus(configured):
    run_pipeline(configured, target_count=25)
    first = out_bytes(configured)
    wipe(configured)
    configured.rng_seed = 999
    run_pipeline(configured, target_count=25)
    assert out_bytes(configured)["corpus"] != first["corpus"]


def test_resume_matches_uninterrupted(configured):
    run_pipeline(configured, target_count=40)
    uninterrupted = out_bytes(configured)
    wipe(configured)

    # Abort early via a small round budget, then resume with the full one.
    configured.round_budget = 3
    run_pipeline(configured, target_count=40)
    interrupted_size = json.loads(Path(configured.paths.report).read_text())["pool_size_end"]
    assert interrupted_size < 40
    configured.round_budget = 200
    run_pipeline(configured, target_count=40)
    assert out_bytes(configured) == uninterrupted


def test_target_below_pool_size_exports_immediately(configured):
    report = run_pipeline(configured, target_count=5)
    assert report.rounds_run == 0
    assert report.pool_size_end == 10  # the seed pool
    assert Path(configured.paths.corpus).exists()


def test_round_budget_exhaustion_warns(configured, caplog):
    configured.round_budget = 1
    with caplog.at_level("WARNING"):
        report = run_pipeline(configured, target_count=1000)
    assert report.rounds_run == 1
    assert any("budget" in m for m in caplog.messages)


def test_generated_instances_carry_full_provenance(configured):
    run_pipeline(configured, target_count=20)
    for line in Path(configured.paths.corpus).read_text().splitlines():
        obj = json.loads(line)
        if obj["source"] == "generated":
            # instruction, scenario, and instance exchanges
            assert len(obj["exchange_ids"]) >= 3


def test_state_roundtrip_preserves_pool(configured):
    pool, _ = load_or_seed_pool(configured)
    assert len(pool) == 10
    save_state(configured, pool, next_round=4)
    reloaded, next_round = load_or_seed_pool(configured)
    assert next_round == 4
    assert list(reloaded.instances) == list(pool.instances)
