"""Full generation pipeline: seed loading, bootstrap rounds, instance
generation, admission, splits, stats, and export, with resumable state.

Per-round randomness derives from (rng_seed, round index), and pool/index
snapshots are written atomically at round boundaries, so a run aborted
mid-round resumes from the last completed round and lands on the same corpus
an uninterrupted run would produce. Under the mock backend the whole run is
a pure function of (config, seed files, rng seed).
"""

from __future__ import annotations

import json
import logging
import random
from dataclasses import dataclass, field
from pathlib import Path

from . import dedup, orchestrator, store
from .config import PipelineConfig
from .llm import ChatClient, ExchangeLog, HttpChatClient, MockChatClient
from .prompts import PromptLibrary

logger = logging.getLogger(__name__)

POOL_FILENAME = "pool.json"
INDEX_FILENAME = "index.json"
RUN_STATE_FILENAME = "run_state.json"
EXCHANGES_FILENAME = "exchanges.jsonl"


@dataclass
class RunReport:
    target_count: int
    rounds_run: int = 0
    pool_size_start: int = 0
    pool_size_end: int = 0
    bootstrap_calls: int = 0
    bootstrap_skipped: int = 0
    instruction_candidates: int = 0
    instructions_admitted: int = 0
    instruction_rejections: dict[str, int] = field(default_factory=dict)
    scenario_degenerate: int = 0
    instance_candidates: int = 0
    instance_failures: dict[str, int] = field(default_factory=dict)
    instances_admitted: int = 0
    instance_rejections: dict[str, int] = field(default_factory=dict)

    def bump(self, table: str, reason: str) -> None:
        counts = getattr(self, table)
        counts[reason] = counts.get(reason, 0) + 1

    def to_json_obj(self) -> dict:
        return {
            "target_count": self.target_count,
            "rounds_run": self.rounds_run,
            "pool_size_start": self.pool_size_start,
            "pool_size_end": self.pool_size_end,
            "bootstrap_calls": self.bootstrap_calls,
            "bootstrap_skipped": self.bootstrap_skipped,
            "instruction_candidates": self.instruction_candidates,
            "instructions_admitted": self.instructions_admitted,
            "instruction_rejections": dict(sorted(self.instruction_rejections.items())),
            "scenario_degenerate": self.scenario_degenerate,
            "instance_candidates": self.instance_candidates,
            "instance_failures": dict(sorted(self.instance_failures.items())),
            "instances_admitted": self.instances_admitted,
            "instance_rejections": dict(sorted(self.instance_rejections.items())),
        }


def make_client(config: PipelineConfig) -> ChatClient:
    if config.llm.backend == "mock":
        return MockChatClient(library=load_prompts(config))
    return HttpChatClient(
        endpoint=config.llm.endpoint,
        model=config.llm.model,
        api_key=config.llm.api_key or None,
        max_retries=config.llm.max_retries,
        max_concurrency=config.llm.max_concurrency,
    )


def load_prompts(config: PipelineConfig) -> PromptLibrary:
    if config.paths.prompts_dir:
        return PromptLibrary.from_dir(config.paths.prompts_dir)
    return PromptLibrary.defaults()


def round_rng(rng_seed: int, round_index: int) -> random.Random:
    """Deterministic per-round randomness, independent of prior rounds."""
    return random.Random(f"{rng_seed}:round:{round_index}")


def _state_paths(config: PipelineConfig) -> dict[str, Path]:
    state_dir = Path(config.paths.state_dir)
    return {
        "dir": state_dir,
        "pool": state_dir / POOL_FILENAME,
        "index": state_dir / INDEX_FILENAME,
        "run": state_dir / RUN_STATE_FILENAME,
        "exchanges": state_dir / EXCHANGES_FILENAME,
    }


def new_pool(config: PipelineConfig) -> store.TaskPool:
    return store.TaskPool(
        rouge_threshold=config.thresholds.rouge_dup,
        jaccard_threshold=config.thresholds.jaccard_dup,
        num_perm=config.dedup.num_perm,
        minhash_seed=config.dedup.minhash_seed,
        max_field_tokens=config.thresholds.max_tokens,
    )


def load_holdout_ids(config: PipelineConfig) -> set[str]:
    if not config.paths.holdout:
        return set()
    path = Path(config.paths.holdout)
    if not path.exists():
        return set()
    return set(json.loads(path.read_text(encoding="utf-8")))


def load_or_seed_pool(config: PipelineConfig) -> tuple[store.TaskPool, int]:
    """Resume the pool from the state dir, or seed a fresh one.

    Returns (pool, next_round_index).
    """
    paths = _state_paths(config)
    if paths["pool"].exists():
        pool = store.TaskPool.load(paths["pool"], index_path=paths["index"])
        next_round = 0
        if paths["run"].exists():
            next_round = json.loads(paths["run"].read_text(encoding="utf-8"))["next_round"]
        logger.info("resumed pool with %d instances (next round %d)", len(pool), next_round)
        return pool, next_round
    pool = new_pool(config)
    seed_path = Path(config.paths.seed_pool)
    if seed_path.exists():
        admitted, rejections = store.load_seed_file(seed_path, pool, load_holdout_ids(config))
        logger.info("seeded pool with %d instances (%s rejected)", admitted, rejections or "none")
    else:
        logger.warning("seed pool file %s missing; starting empty", seed_path)
    return pool, 0


def save_state(config: PipelineConfig, pool: store.TaskPool, next_round: int) -> None:
    paths = _state_paths(config)
    paths["dir"].mkdir(parents=True, exist_ok=True)
    pool.save(paths["pool"])
    pool.index.save(paths["index"])
    tmp = paths["run"].with_suffix(".tmp")
    tmp.write_text(json.dumps({"next_round": next_round}), encoding="utf-8")
    tmp.replace(paths["run"])


def run_generation_round(
    pool: store.TaskPool,
    config: PipelineConfig,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
    rng: random.Random,
    report: RunReport,
    target_count: int,
    intent: str | None = None,
) -> None:
    """One bootstrap round plus instance generation for its new instructions."""
    result = orchestrator.bootstrap_instructions(
        pool.seed_exemplars(),
        pool.generated_exemplars(),
        rng,
        client,
        library,
        log,
        seeds_per_prompt=config.sampling.seeds_per_prompt,
        generated_per_prompt=config.sampling.generated_per_prompt,
        intent=intent,
        max_retries=config.llm.max_retries,
    )
    report.bootstrap_calls += 1
    if result.skipped:
        report.bootstrap_skipped += 1
        return

    for candidate in result.candidates:
        report.instruction_candidates += 1
        instruction_id, reason, _ = pool.admit_instruction(
            candidate.text,
            source="generated",
            exemplar_ids=candidate.exemplar_ids,
            exchange_ids=[candidate.exchange_id] if candidate.exchange_id else (),
        )
        if instruction_id is None:
            report.bump("instruction_rejections", reason)
            continue
        report.instructions_admitted += 1

        scenario_result = orchestrator.generate_scenarios(
            candidate,
            instruction_id,
            client,
            rng,
            library,
            log,
            count=config.sampling.scenarios_per_instruction,
            max_retries=config.llm.max_retries,
        )
        if scenario_result.degenerate:
            report.scenario_degenerate += 1

        instance_result = orchestrator.generate_instance(
            candidate,
            scenario_result.selected,
            client,
            library,
            log,
            max_retries=config.llm.max_retries,
        )
        if not instance_result.ok:
            report.bump("instance_failures", instance_result.reason)
            continue
        report.instance_candidates += 1

        exchange_ids = (
            ([candidate.exchange_id] if candidate.exchange_id else [])
            + scenario_result.exchange_ids[-1:]
            + instance_result.exchange_ids[-1:]
        )
        instance, reason = pool.admit_instance(
            instruction=candidate.text,
            scenario=scenario_result.selected or None,
            input_code=instance_result.input_code,
            output_code=instance_result.output_code,
            source="generated",
            exchange_ids=exchange_ids,
            instruction_id=instruction_id,
        )
        if instance is None:
            report.bump("instance_rejections", reason)
            continue
        report.instances_admitted += 1
        if len(pool) >= target_count:
            return


def run_pipeline(config: PipelineConfig, target_count: int) -> RunReport:
    """Drive rounds until the pool reaches target_count or the budget ends,
    then split, compute stats, and export."""
    paths = _state_paths(config)
    client = make_client(config)
    library = load_prompts(config)
    paths["dir"].mkdir(parents=True, exist_ok=True)
    log = ExchangeLog(paths["exchanges"])

    pool, next_round = load_or_seed_pool(config)
    report = RunReport(target_count=target_count, pool_size_start=len(pool))

    round_index = next_round
    intent_cycle = config.intent_labels
    while len(pool) < target_count and round_index < config.round_budget:
        rng = round_rng(config.rng_seed, round_index)
        intent = intent_cycle[round_index % len(intent_cycle)] if intent_cycle else None
        run_generation_round(
            pool, config, client, library, log, rng, report, target_count, intent=intent
        )
        round_index += 1
        report.rounds_run += 1
        save_state(config, pool, round_index)

    if report.rounds_run == 0:
        save_state(config, pool, round_index)
    report.pool_size_end = len(pool)
    if len(pool) < target_count:
        logger.warning(
            "round budget exhausted at %d instances (target %d)", len(pool), target_count
        )

    finalize_outputs(config, pool)
    Path(config.paths.report).parent.mkdir(parents=True, exist_ok=True)
    Path(config.paths.report).write_text(
        json.dumps(report.to_json_obj(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return report


def finalize_outputs(config: PipelineConfig, pool: store.TaskPool) -> None:
    """Write corpus, splits, and stats files for the current pool."""
    corpus_path = Path(config.paths.corpus)
    corpus_path.parent.mkdir(parents=True, exist_ok=True)
    store.export_corpus(pool, corpus_path)
    splits = store.split_dataset(pool, random.Random(f"{config.rng_seed}:split"))
    Path(config.paths.splits).parent.mkdir(parents=True, exist_ok=True)
    splits.save(config.paths.splits)
    stats = store.compute_stats(pool)
    Path(config.paths.stats).parent.mkdir(parents=True, exist_ok=True)
    Path(config.paths.stats).write_text(stats.to_json(), encoding="utf-8")
