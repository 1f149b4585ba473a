"""Command-line entry point: every pipeline stage as a subcommand.

All stages read one config file; every config field can be overridden with a
flag (--section-field value) or --set section.field=value. Logs go to
stderr, data to the configured paths. Exit codes: 0 success, 2 config
error, 3 input error, 4 backend error, 1 internal error.
"""

from __future__ import annotations

import argparse
import json
import logging
import random
import sys
from pathlib import Path

from . import orchestrator, pipeline, store
from .config import ConfigError, PipelineConfig, iter_field_paths, load_config, set_by_path
from .evalharness import (
    EvalSuite,
    build_eval_report,
    judge_with_llm,
    load_eval_entries,
    record_human_scores,
)
from .llm import ChatError, ExchangeLog
from .miner import FilterConfig, IngestionError, apply_auto_filters, ingest_with_counts
from .review import ReviewService, create_app

logger = logging.getLogger("editforge")

EXIT_OK = 0
EXIT_INTERNAL = 1
EXIT_CONFIG = 2
EXIT_INPUT = 3
EXIT_BACKEND = 4


def _flag_name(dotted: str) -> str:
    return "--" + dotted.replace(".", "-").replace("_", "-")


def _add_config_flags(parser: argparse.ArgumentParser) -> dict[str, str]:
    """One override flag per config field; returns dest -> dotted path."""
    mapping = {}
    group = parser.add_argument_group("config overrides")
    for dotted, default in iter_field_paths():
        dest = "cfg__" + dotted.replace(".", "__")
        group.add_argument(
            _flag_name(dotted),
            dest=dest,
            default=None,
            metavar="V",
            help=f"override {dotted} (default {default!r})",
        )
        mapping[dest] = dotted
    return mapping


def build_parser() -> tuple[argparse.ArgumentParser, dict[str, str]]:
    parser = argparse.ArgumentParser(
        prog="editforge",
        description="Synthesize, deduplicate, analyze, and evaluate a code-editing corpus.",
    )
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, default=None, help="YAML config file")
    common.add_argument(
        "--set",
        action="append",
        default=[],
        metavar="KEY=VALUE",
        help="override any config field by dotted path",
    )
    flag_map = _add_config_flags(common)

    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("mine", parents=[common], help="mine git repositories into seed tasks")
    p.add_argument("--repo", action="append", required=True, type=Path, help="repository path (repeatable)")
    p.add_argument("--out", type=Path, default=None, help="seed JSONL output (default: paths.seed_pool)")
    p.add_argument("--holdout", type=int, default=0, help="reserve N kept seeds for the test split")
    p.add_argument("--rewrite", action="store_true", help="rewrite messages with the LLM and queue for confirmation")

    p = sub.add_parser("bootstrap", parents=[common], help="run instruction bootstrap rounds only")
    p.add_argument("--rounds", type=int, default=1)

    p = sub.add_parser("generate", parents=[common], help="generate instances for pending instructions")
    p.add_argument("--limit", type=int, default=None)

    p = sub.add_parser("run", parents=[common], help="full pipeline: generate until target, then export")
    p.add_argument("--target", type=int, required=True, help="target pool size")

    sub.add_parser("analyze", parents=[common], help="compute corpus statistics")
    sub.add_parser("split", parents=[common], help="write train/validation/test splits")
    sub.add_parser("export", parents=[common], help="export the corpus JSONL")

    p = sub.add_parser("judge", parents=[common], help="judge model outputs with the LLM")
    p.add_argument("--eval-file", type=Path, required=True, help="JSONL of model outputs")
    p.add_argument("--out", type=Path, default=None, help="report JSON path (default: stdout only)")

    p = sub.add_parser("serve-review", parents=[common], help="serve the human review API and UI")
    p.add_argument("--host", default=None)
    p.add_argument("--port", type=int, default=None)

    return parser, flag_map


def config_from_args(args: argparse.Namespace, flag_map: dict[str, str]) -> PipelineConfig:
    overrides: dict[str, str] = {}
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        key, value = item.split("=", 1)
        overrides[key.strip()] = value.strip()
    config = load_config(args.config, overrides)
    for dest, dotted in flag_map.items():
        value = getattr(args, dest, None)
        if value is not None:
            set_by_path(config, dotted, value)
    config.validate()
    return config


# ---------------------------------------------------------------------------
# Commands
# ---------------------------------------------------------------------------

def cmd_mine(args, config: PipelineConfig) -> int:
    out_path = args.out or Path(config.paths.seed_pool)
    out_path.parent.mkdir(parents=True, exist_ok=True)
    filter_cfg = FilterConfig(
        min_stars=config.thresholds.min_stars,
        max_edited_rows=config.thresholds.max_edited_rows,
    )
    client = pipeline.make_client(config) if args.rewrite else None
    library = pipeline.load_prompts(config)
    log = ExchangeLog(Path(config.paths.state_dir) / pipeline.EXCHANGES_FILENAME)
    review = ReviewService(config.paths.state_dir) if args.rewrite else None

    reason_counts: dict[str, int] = {}
    kept_objs: dict[str, dict] = {}
    queued = parked = 0
    for repo in args.repo:
        for record, n_changed in ingest_with_counts(repo):
            verdict = apply_auto_filters(record, n_changed, filter_cfg)
            reason_counts[verdict.reason] = reason_counts.get(verdict.reason, 0) + 1
            if not verdict.kept:
                continue
            if args.rewrite:
                rewritten, _ = orchestrator.rewrite_commit_message(
                    record.message, record.content_before, record.content_after,
                    client, library, log, max_retries=config.llm.max_retries,
                )
                if rewritten is None:
                    parked += 1
                    continue
                review.enqueue(
                    "rewrite_confirm",
                    {
                        "instruction": rewritten,
                        "original_message": record.message,
                        "input": record.content_before,
                        "output": record.content_after,
                    },
                )
                queued += 1
                continue
            instruction = " ".join(record.message.splitlines()[0].split())
            obj = _seed_obj(instruction, record.content_before, record.content_after)
            kept_objs.setdefault(obj["id"], obj)

    holdout_ids: list[str] = []
    if kept_objs:
        with out_path.open("w", encoding="utf-8", newline="\n") as handle:
            for obj in kept_objs.values():
                handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
        if args.holdout > 0:
            rng = random.Random(f"{config.rng_seed}:holdout")
            holdout_ids = sorted(rng.sample(list(kept_objs), min(args.holdout, len(kept_objs))))
            holdout_path = Path(config.paths.holdout or f"{out_path}.holdout.json")
            holdout_path.write_text(json.dumps(holdout_ids), encoding="utf-8")
    summary = {
        "kept": len(kept_objs),
        "queued_for_confirmation": queued,
        "parked": parked,
        "held_out": len(holdout_ids),
        "verdicts": dict(sorted(reason_counts.items())),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return EXIT_OK


def _seed_obj(instruction: str, input_code: str, output_code: str) -> dict:
    from .diffstats import line_diff

    diff = line_diff(input_code, output_code)
    return {
        "id": store.instance_id(instruction, input_code, output_code),
        "instruction": instruction,
        "scenario": None,
        "input": input_code,
        "output": output_code,
        "source": "github_seed",
        "n_diff": diff.n_diff,
        "r_diff": diff.r_diff,
        "bin": diff.bin,
        "intent": None,
        "exchange_ids": [],
    }


def cmd_bootstrap(args, config: PipelineConfig) -> int:
    pool, next_round = pipeline.load_or_seed_pool(config)
    client = pipeline.make_client(config)
    library = pipeline.load_prompts(config)
    log = ExchangeLog(Path(config.paths.state_dir) / pipeline.EXCHANGES_FILENAME)
    admitted = rejected = 0
    for offset in range(args.rounds):
        rng = pipeline.round_rng(config.rng_seed, next_round + offset)
        result = orchestrator.bootstrap_instructions(
            pool.seed_exemplars(),
            pool.generated_exemplars(),
            rng,
            client,
            library,
            log,
            seeds_per_prompt=config.sampling.seeds_per_prompt,
            generated_per_prompt=config.sampling.generated_per_prompt,
            max_retries=config.llm.max_retries,
        )
        for candidate in result.candidates:
            instruction_id, reason, _ = pool.admit_instruction(
                candidate.text,
                source="generated",
                exemplar_ids=candidate.exemplar_ids,
                exchange_ids=[candidate.exchange_id] if candidate.exchange_id else (),
            )
            if instruction_id is None:
                rejected += 1
            else:
                admitted += 1
    pipeline.save_state(config, pool, next_round + args.rounds)
    print(json.dumps({"rounds": args.rounds, "admitted": admitted, "rejected": rejected}))
    return EXIT_OK


def cmd_generate(args, config: PipelineConfig) -> int:
    pool, next_round = pipeline.load_or_seed_pool(config)
    client = pipeline.make_client(config)
    library = pipeline.load_prompts(config)
    log = ExchangeLog(Path(config.paths.state_dir) / pipeline.EXCHANGES_FILENAME)
    instantiated = {store.instruction_key(i.instruction) for i in pool.instances.values()}
    pending = [
        entry
        for key, entry in pool.instructions.items()
        if entry.source == "generated" and key not in instantiated
    ]
    if args.limit is not None:
        pending = pending[: args.limit]
    report = pipeline.RunReport(target_count=len(pool) + len(pending))
    for entry in pending:
        rng = random.Random(f"{config.rng_seed}:generate:{entry.instruction_id}")
        candidate = orchestrator.InstructionCandidate(
            text=entry.text,
            source="generated",
            exemplar_ids=list(entry.exemplar_ids),
            exchange_id=entry.exchange_ids[0] if entry.exchange_ids else None,
        )
        scenario_result = orchestrator.generate_scenarios(
            candidate, entry.instruction_id, client, rng, library, log,
            count=config.sampling.scenarios_per_instruction,
            max_retries=config.llm.max_retries,
        )
        instance_result = orchestrator.generate_instance(
            candidate, scenario_result.selected, client, library, log,
            max_retries=config.llm.max_retries,
        )
        if not instance_result.ok:
            report.bump("instance_failures", instance_result.reason)
            continue
        report.instance_candidates += 1
        _, reason = pool.admit_instance(
            instruction=entry.text,
            scenario=scenario_result.selected or None,
            input_code=instance_result.input_code,
            output_code=instance_result.output_code,
            source="generated",
            exchange_ids=list(entry.exchange_ids)
            + scenario_result.exchange_ids[-1:]
            + instance_result.exchange_ids[-1:],
            instruction_id=entry.instruction_id,
        )
        if reason == "admitted":
            report.instances_admitted += 1
        else:
            report.bump("instance_rejections", reason)
    pipeline.save_state(config, pool, next_round)
    print(json.dumps(report.to_json_obj(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_run(args, config: PipelineConfig) -> int:
    report = pipeline.run_pipeline(config, args.target)
    print(json.dumps(report.to_json_obj(), indent=2, sort_keys=True))
    return EXIT_OK


def cmd_analyze(args, config: PipelineConfig) -> int:
    pool, _ = pipeline.load_or_seed_pool(config)
    if not pool.instances:
        raise FileNotFoundError("no pool state or seeds to analyze")
    stats = store.compute_stats(pool)
    Path(config.paths.stats).parent.mkdir(parents=True, exist_ok=True)
    Path(config.paths.stats).write_text(stats.to_json(), encoding="utf-8")
    print(stats.to_json(), end="")
    return EXIT_OK


def cmd_split(args, config: PipelineConfig) -> int:
    pool, _ = pipeline.load_or_seed_pool(config)
    splits = store.split_dataset(pool, random.Random(f"{config.rng_seed}:split"))
    Path(config.paths.splits).parent.mkdir(parents=True, exist_ok=True)
    splits.save(config.paths.splits)
    print(
        json.dumps(
            {"train": len(splits.train), "validation": len(splits.validation), "test": len(splits.test)}
        )
    )
    return EXIT_OK


def cmd_export(args, config: PipelineConfig) -> int:
    pool, _ = pipeline.load_or_seed_pool(config)
    Path(config.paths.corpus).parent.mkdir(parents=True, exist_ok=True)
    count = store.export_corpus(pool, config.paths.corpus)
    print(json.dumps({"exported": count, "path": config.paths.corpus}))
    return EXIT_OK


def cmd_judge(args, config: PipelineConfig) -> int:
    entries = load_eval_entries(args.eval_file)
    if not entries:
        raise ValueError(f"no eval entries in {args.eval_file}")
    corpus_path = Path(config.paths.corpus)
    if not corpus_path.exists():
        raise FileNotFoundError(f"corpus file {corpus_path} required for reference diffs")
    corpus = store.import_corpus(corpus_path)
    diffs = {iid: inst.diff for iid, inst in corpus.instances.items()}
    missing = [e["sample_id"] for e in entries if e["sample_id"] not in diffs]
    if missing:
        raise ValueError(f"eval samples missing from corpus: {missing[:5]}")

    client = pipeline.make_client(config)
    library = pipeline.load_prompts(config)
    log = ExchangeLog(Path(config.paths.state_dir) / pipeline.EXCHANGES_FILENAME)
    suite = EvalSuite.from_entries(entries, random.Random(f"{config.rng_seed}:judge"))
    for record in suite.records:
        judge_with_llm(record, client, library, log)

    review = ReviewService(config.paths.state_dir)
    scores = review.eval_scores()
    if scores:
        record_human_scores(suite, scores)
    report = build_eval_report(suite.records, diffs, suite=suite)
    if args.out:
        args.out.parent.mkdir(parents=True, exist_ok=True)
        args.out.write_text(
            json.dumps(report.to_json_obj(), indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
    print(report.text_table(), end="")
    return EXIT_OK


def cmd_serve_review(args, config: PipelineConfig) -> int:
    import uvicorn

    state_dir = Path(config.paths.state_dir)
    pool_path = state_dir / pipeline.POOL_FILENAME
    if pool_path.exists():
        pool = store.TaskPool.load(pool_path, index_path=state_dir / pipeline.INDEX_FILENAME)
    else:
        pool = pipeline.new_pool(config)
    service = ReviewService(state_dir)
    static_dir = config.review.static_dir or None
    if static_dir is None:
        default_static = Path("frontend/dist")
        static_dir = default_static if default_static.is_dir() else None
    app = create_app(service, pool, pool_path=pool_path, static_dir=static_dir)
    host = args.host or config.review.host
    port = args.port if args.port is not None else config.review.port
    logger.info("serving review API on %s:%d", host, port)
    uvicorn.run(app, host=host, port=port, log_level="warning")
    return EXIT_OK


_COMMANDS = {
    "mine": cmd_mine,
    "bootstrap": cmd_bootstrap,
    "generate": cmd_generate,
    "run": cmd_run,
    "analyze": cmd_analyze,
    "split": cmd_split,
    "export": cmd_export,
    "judge": cmd_judge,
    "serve-review": cmd_serve_review,
}


def main(argv: list[str] | None = None) -> int:
    logging.basicConfig(
        stream=sys.stderr,
        level=logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
    )
    parser, flag_map = build_parser()
    args = parser.parse_args(argv)
    try:
        config = config_from_args(args, flag_map)
        return _COMMANDS[args.command](args, config)
    except ConfigError as exc:
        _fail("config", exc)
        return EXIT_CONFIG
    except (FileNotFoundError, IngestionError, ValueError) as exc:
        _fail("input", exc)
        return EXIT_INPUT
    except ChatError as exc:
        _fail("backend", exc)
        return EXIT_BACKEND
    except Exception as exc:  # pragma: no cover - defensive
        logger.exception("internal error")
        _fail("internal", exc)
        return EXIT_INTERNAL


def _fail(category: str, exc: Exception) -> None:
    sys.stderr.write(json.dumps({"error": category, "message": str(exc)}) + "\n")


if __name__ == "__main__":
    sys.exit(main())
