"""Task pool and corpus lifecycle: admission, splits, statistics, import/export.

The pool is the single writer for accepted instructions and task instances.
Admission cleans candidate pairs, applies instruction- and instance-level
dedup, computes diff statistics, and assigns stable content-hash ids so
resume, review decisions, and dedup survive re-runs. Corpus files are
newline-delimited JSON with a fixed field order.
"""

from __future__ import annotations

import hashlib
import json
import logging
import random
import threading
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Iterable

import numpy as np

from . import dedup
from .diffstats import BIN_COUNT, DiffStats, line_diff

logger = logging.getLogger(__name__)

SOURCES = ("github_seed", "curated_seed", "generated")
REJECTION_REASONS = (
    "empty_field",
    "input_equals_output",
    "too_long",
    "instruction_dup",
    "instance_dup",
)

DEFAULT_MAX_FIELD_TOKENS = 1024
TRAIN_FRACTION = 0.95

CORPUS_FIELDS = (
    "id",
    "instruction",
    "scenario",
    "input",
    "output",
    "source",
    "n_diff",
    "r_diff",
    "bin",
    "intent",
    "exchange_ids",
)

POOL_SNAPSHOT_FORMAT = "editforge-pool/1"


def whitespace_tokens(text: str) -> int:
    """Default pluggable token counter."""
    return len(text.split())


def instance_id(instruction: str, input_code: str, output_code: str) -> str:
    """Stable content hash of the identity triple."""
    digest = hashlib.sha256(
        json.dumps([instruction, input_code, output_code], ensure_ascii=False).encode("utf-8")
    ).hexdigest()
    return f"t{digest[:32]}"


def instruction_key(text: str) -> str:
    digest = hashlib.sha256(text.encode("utf-8")).hexdigest()
    return f"g{digest[:32]}"


@dataclass(frozen=True)
class TaskInstance:
    id: str
    instruction: str
    scenario: str | None
    input_code: str
    output_code: str
    source: str
    diff: DiffStats
    intent: str | None = None
    exchange_ids: tuple[str, ...] = ()

    def to_json_obj(self) -> dict:
        return {
            "id": self.id,
            "instruction": self.instruction,
            "scenario": self.scenario,
            "input": self.input_code,
            "output": self.output_code,
            "source": self.source,
            "n_diff": self.diff.n_diff,
            "r_diff": self.diff.r_diff,
            "bin": self.diff.bin,
            "intent": self.intent,
            "exchange_ids": list(self.exchange_ids),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "TaskInstance":
        return cls(
            id=obj["id"],
            instruction=obj["instruction"],
            scenario=obj.get("scenario"),
            input_code=obj["input"],
            output_code=obj["output"],
            source=obj["source"],
            diff=DiffStats(n_diff=obj["n_diff"], r_diff=obj["r_diff"], bin=obj["bin"]),
            intent=obj.get("intent"),
            exchange_ids=tuple(obj.get("exchange_ids") or ()),
        )


@dataclass
class InstructionEntry:
    """One accepted instruction text, seed or generated."""

    instruction_id: str
    text: str
    source: str
    exemplar_ids: tuple[str, ...] = ()
    exchange_ids: tuple[str, ...] = ()


def clean_code(text: str) -> str:
    """Strip stray fence markers and leading/trailing blank lines."""
    lines = text.splitlines()
    while lines and (not lines[0].strip() or lines[0].strip().startswith("```")):
        lines.pop(0)
    while lines and (not lines[-1].strip() or lines[-1].strip().startswith("```")):
        lines.pop()
    return "\n".join(lines)


class TaskPool:
    """Single-writer pool of admitted instructions and task instances."""

    def __init__(
        self,
        rouge_threshold: float = dedup.ROUGE_DUP_THRESHOLD,
        jaccard_threshold: float = dedup.JACCARD_DUP_THRESHOLD,
        num_perm: int = dedup.DEFAULT_NUM_PERM,
        minhash_seed: int = dedup.DEFAULT_MINHASH_SEED,
        max_field_tokens: int = DEFAULT_MAX_FIELD_TOKENS,
    ):
        self.rouge_threshold = rouge_threshold
        self.max_field_tokens = max_field_tokens
        self.instances: dict[str, TaskInstance] = {}
        self.instructions: dict[str, InstructionEntry] = {}
        self.held_out: set[str] = set()
        self.index = dedup.LshIndex(
            num_perm=num_perm, threshold=jaccard_threshold, seed=minhash_seed
        )
        self._lock = threading.Lock()

    def __len__(self) -> int:
        return len(self.instances)

    # -- views ---------------------------------------------------------------

    def instruction_pool(self) -> list[tuple[str, str]]:
        """(id, text) pairs of every accepted instruction, admission order."""
        return [(e.instruction_id, e.text) for e in self.instructions.values()]

    def seed_exemplars(self) -> list[tuple[str, str]]:
        """Seed instructions available for few-shot sampling (not held out)."""
        return [
            (e.instruction_id, e.text)
            for e in self.instructions.values()
            if e.source in ("github_seed", "curated_seed")
            and e.instruction_id not in self.held_out
        ]

    def generated_exemplars(self) -> list[tuple[str, str]]:
        return [
            (e.instruction_id, e.text)
            for e in self.instructions.values()
            if e.source == "generated"
        ]

    # -- instruction admission ------------------------------------------------

    def admit_instruction(
        self,
        text: str,
        source: str,
        exemplar_ids: Iterable[str] = (),
        exchange_ids: Iterable[str] = (),
    ) -> tuple[str | None, str, float]:
        """Admit an instruction text into the dedup pool.

        Generated instructions are rejected when their best ROUGE-L score
        against any accepted instruction exceeds the threshold; seeds are
        exempt. Returns (instruction_id or None, reason, best_score).
        """
        text = " ".join(text.split())
        if not text:
            return None, "empty_field", 0.0
        with self._lock:
            if source == "generated":
                is_dup, score, _ = dedup.is_instruction_dup(
                    text, self.instruction_pool(), threshold=self.rouge_threshold
                )
                if is_dup:
                    return None, "instruction_dup", score
            else:
                score = 0.0
            entry_id = instruction_key(text)
            if entry_id not in self.instructions:
                self.instructions[entry_id] = InstructionEntry(
                    instruction_id=entry_id,
                    text=text,
                    source=source,
                    exemplar_ids=tuple(exemplar_ids),
                    exchange_ids=tuple(exchange_ids),
                )
            return entry_id, "admitted", score

    # -- instance admission ----------------------------------------------------

    def admit_instance(
        self,
        instruction: str,
        scenario: str | None,
        input_code: str,
        output_code: str,
        source: str,
        exchange_ids: Iterable[str] = (),
        intent: str | None = None,
        held_out: bool = False,
        instruction_id: str | None = None,
    ) -> tuple[TaskInstance | None, str]:
        """Clean, dedup, and insert one candidate pair.

        Returns (instance, "admitted") on success or (None, reason) with
        exactly one rejection reason. The instance, its instruction entry,
        and the LSH index are updated atomically under the pool lock.
        """
        if source not in SOURCES:
            raise ValueError(f"unknown source {source!r}")
        instruction = " ".join(instruction.split())
        input_code = clean_code(input_code)
        output_code = clean_code(output_code)
        if not instruction or not input_code or not output_code:
            return None, "empty_field"
        if input_code == output_code:
            return None, "input_equals_output"
        if (
            whitespace_tokens(input_code) > self.max_field_tokens
            or whitespace_tokens(output_code) > self.max_field_tokens
        ):
            return None, "too_long"

        with self._lock:
            if source == "generated":
                own_id = instruction_id or instruction_key(instruction)
                is_dup, _, _ = dedup.is_instruction_dup(
                    instruction,
                    self.instruction_pool(),
                    threshold=self.rouge_threshold,
                    exclude_id=own_id,
                )
                if is_dup:
                    return None, "instruction_dup"

            new_id = instance_id(instruction, input_code, output_code)
            if new_id in self.instances:
                return None, "instance_dup"
            is_dup, _ = dedup.is_instance_dup(input_code, self.index)
            if is_dup:
                return None, "instance_dup"

            diff = line_diff(input_code, output_code)
            instance = TaskInstance(
                id=new_id,
                instruction=instruction,
                scenario=scenario if scenario else None,
                input_code=input_code,
                output_code=output_code,
                source=source,
                diff=diff,
                intent=intent,
                exchange_ids=tuple(exchange_ids),
            )
            self.instances[new_id] = instance
            self.index.insert(new_id, input_code)
            registry_key = instruction_key(instruction)
            if registry_key not in self.instructions:
                # Seed instructions are addressed by their instance id so
                # exemplar provenance points at real seed tasks; generated
                # ones keep their text-hash id.
                self.instructions[registry_key] = InstructionEntry(
                    instruction_id=registry_key if source == "generated" else new_id,
                    text=instruction,
                    source=source,
                    exchange_ids=tuple(exchange_ids),
                )
            if held_out:
                if source != "github_seed":
                    raise ValueError("only github_seed instances can be held out")
                self.held_out.add(new_id)
            return instance, "admitted"

    def set_intent(self, instance_id_: str, intent: str) -> None:
        with self._lock:
            self.instances[instance_id_] = replace(self.instances[instance_id_], intent=intent)

    # -- persistence -----------------------------------------------------------

    def snapshot_obj(self) -> dict:
        return {
            "format": POOL_SNAPSHOT_FORMAT,
            "instances": [inst.to_json_obj() for inst in self.instances.values()],
            "held_out": sorted(self.held_out),
            "instructions": [
                {
                    "instruction_id": e.instruction_id,
                    "text": e.text,
                    "source": e.source,
                    "exemplar_ids": list(e.exemplar_ids),
                    "exchange_ids": list(e.exchange_ids),
                }
                for e in self.instructions.values()
            ],
            "config": {
                "rouge_threshold": self.rouge_threshold,
                "jaccard_threshold": self.index.threshold,
                "num_perm": self.index.num_perm,
                "minhash_seed": self.index.hasher.seed,
                "max_field_tokens": self.max_field_tokens,
            },
        }

    def save(self, path: str | Path) -> None:
        payload = json.dumps(self.snapshot_obj(), ensure_ascii=False, sort_keys=True)
        tmp = Path(path).with_suffix(".tmp")
        tmp.write_text(payload, encoding="utf-8")
        tmp.replace(path)

    @classmethod
    def load(cls, path: str | Path, index_path: str | Path | None = None) -> "TaskPool":
        """Restore a pool snapshot.

        When index_path points at a matching LSH snapshot it is reused;
        otherwise the index is rebuilt from the instances (equivalent, since
        signatures are a pure function of content and the minhash seed).
        """
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != POOL_SNAPSHOT_FORMAT:
            raise ValueError(f"unsupported pool snapshot format: {payload.get('format')!r}")
        cfg = payload["config"]
        pool = cls(
            rouge_threshold=cfg["rouge_threshold"],
            jaccard_threshold=cfg["jaccard_threshold"],
            num_perm=cfg["num_perm"],
            minhash_seed=cfg["minhash_seed"],
            max_field_tokens=cfg["max_field_tokens"],
        )
        instance_ids = {obj["id"] for obj in payload["instances"]}
        loaded_index = None
        if index_path is not None and Path(index_path).exists():
            candidate = dedup.LshIndex.load(index_path)
            if (
                candidate.num_perm == cfg["num_perm"]
                and candidate.hasher.seed == cfg["minhash_seed"]
                and candidate.member_ids() == instance_ids
            ):
                loaded_index = candidate
            else:
                logger.warning("index snapshot inconsistent with pool; rebuilding")
        if loaded_index is not None:
            pool.index = loaded_index
        for obj in payload["instances"]:
            instance = TaskInstance.from_json_obj(obj)
            pool.instances[instance.id] = instance
            if loaded_index is None:
                pool.index.insert(instance.id, instance.input_code)
        for entry in payload["instructions"]:
            pool.instructions[instruction_key(entry["text"])] = InstructionEntry(
                instruction_id=entry["instruction_id"],
                text=entry["text"],
                source=entry["source"],
                exemplar_ids=tuple(entry["exemplar_ids"]),
                exchange_ids=tuple(entry["exchange_ids"]),
            )
        pool.held_out = set(payload["held_out"])
        return pool


# ---------------------------------------------------------------------------
# Corpus files
# ---------------------------------------------------------------------------

def export_corpus(pool: TaskPool, path: str | Path) -> int:
    """Write the pool as JSON lines (UTF-8, LF), one instance per line."""
    count = 0
    with Path(path).open("w", encoding="utf-8", newline="\n") as handle:
        for instance in pool.instances.values():
            handle.write(json.dumps(instance.to_json_obj(), ensure_ascii=False))
            handle.write("\n")
            count += 1
    return count


def import_corpus(path: str | Path, pool: TaskPool | None = None) -> TaskPool:
    """Load a corpus file into a pool, trusting its records.

    Instances are validated against their invariants and inserted verbatim
    (no dedup re-run), so export followed by import is the identity. The LSH
    index and instruction registry are rebuilt for subsequent admissions.
    """
    pool = pool or TaskPool()
    for line_no, line in enumerate(
        Path(path).read_text(encoding="utf-8").splitlines(), start=1
    ):
        if not line.strip():
            continue
        obj = json.loads(line)
        instance = TaskInstance.from_json_obj(obj)
        _validate_instance(instance, line_no)
        if instance.id in pool.instances:
            raise ValueError(f"duplicate instance id {instance.id} at line {line_no}")
        pool.instances[instance.id] = instance
        pool.index.insert(instance.id, instance.input_code)
        key = instruction_key(instance.instruction)
        if key not in pool.instructions:
            pool.instructions[key] = InstructionEntry(
                instruction_id=instance.id if instance.source != "generated" else key,
                text=instance.instruction,
                source=instance.source,
                exchange_ids=instance.exchange_ids,
            )
    return pool


def _validate_instance(instance: TaskInstance, line_no: int) -> None:
    if instance.source not in SOURCES:
        raise ValueError(f"line {line_no}: unknown source {instance.source!r}")
    if instance.input_code == instance.output_code:
        raise ValueError(f"line {line_no}: input equals output")
    expected = line_diff(instance.input_code, instance.output_code)
    if expected != instance.diff:
        raise ValueError(f"line {line_no}: diff stats inconsistent with content")
    if instance.id != instance_id(
        instance.instruction, instance.input_code, instance.output_code
    ):
        raise ValueError(f"line {line_no}: id does not match content hash")


def load_seed_file(
    path: str | Path, pool: TaskPool, held_out_ids: set[str] | None = None
) -> tuple[int, dict[str, int]]:
    """Admit seed instances from a corpus-schema JSONL file.

    Seeds go through normal admission (cleaning plus instance dedup;
    instruction dedup does not apply to seeds). Returns (admitted count,
    rejection-reason histogram).
    """
    admitted = 0
    rejections: dict[str, int] = {}
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        source = obj.get("source", "github_seed")
        if source not in ("github_seed", "curated_seed"):
            raise ValueError(f"seed file contains non-seed source {source!r}")
        held_out = bool(held_out_ids and obj["id"] in held_out_ids)
        instance, reason = pool.admit_instance(
            instruction=obj["instruction"],
            scenario=obj.get("scenario"),
            input_code=obj["input"],
            output_code=obj["output"],
            source=source,
            exchange_ids=obj.get("exchange_ids") or (),
            intent=obj.get("intent"),
            held_out=held_out,
        )
        if instance is None:
            rejections[reason] = rejections.get(reason, 0) + 1
        else:
            admitted += 1
    return admitted, rejections


# ---------------------------------------------------------------------------
# Splits
# ---------------------------------------------------------------------------

@dataclass
class DatasetSplits:
    train: list[str]
    validation: list[str]
    test: list[str]

    def to_json_obj(self) -> dict:
        return {"train": self.train, "validation": self.validation, "test": self.test}

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            json.dumps(self.to_json_obj(), ensure_ascii=False) + "\n", encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "DatasetSplits":
        obj = json.loads(Path(path).read_text(encoding="utf-8"))
        return cls(train=obj["train"], validation=obj["validation"], test=obj["test"])


def split_dataset(pool: TaskPool, rng: random.Random) -> DatasetSplits:
    """Assign every instance to train/validation/test.

    Held-out github seeds form the test set; the rest is shuffled with the
    seeded rng and split 95/5 between train and validation.
    """
    if not pool.instances:
        raise ValueError("cannot split an empty pool")
    test = [iid for iid in pool.instances if iid in pool.held_out]
    if not test:
        logger.warning("no held-out seeds: test split will be empty")
    for iid in test:
        if pool.instances[iid].source != "github_seed":
            raise ValueError(f"held-out instance {iid} is not a github seed")
    rest = [iid for iid in pool.instances if iid not in pool.held_out]
    rng.shuffle(rest)
    n_train = int(len(rest) * TRAIN_FRACTION + 0.5)
    return DatasetSplits(train=rest[:n_train], validation=rest[n_train:], test=test)


# ---------------------------------------------------------------------------
# Statistics
# ---------------------------------------------------------------------------

_ARTICLES = {"a", "an", "the", "this", "that", "these", "those", "its", "your",
             "all", "any", "some", "each", "every", "my", "our", "their"}
_SPAN_BOUNDARIES = {"to", "for", "in", "into", "of", "on", "onto", "with",
                    "from", "by", "at", "and", "or", "so", "that", "before",
                    "after", "when", "using", "within", "across", "instead",
                    "via", "as", "if", "where", "is", "are", "be", "around",
                    "over", "under", "inside", "outside", "behind", "beyond",
                    "without", "between", "against", "through", "during",
                    "until", "toward", "towards", "per"}

# Irregular forms the suffix rules below would butcher.
_LEMMA_EXCEPTIONS = {
    "fixes": "fix",
    "uses": "use",
    "used": "use",
    "using": "use",
    "removes": "remove",
    "removed": "remove",
    "renames": "rename",
    "renamed": "rename",
    "merges": "merge",
    "merged": "merge",
    "changes": "change",
    "changed": "change",
    "creates": "create",
    "created": "create",
    "improves": "improve",
    "improved": "improve",
    "replaces": "replace",
    "replaced": "replace",
    "updates": "update",
    "updated": "update",
    "moves": "move",
    "moved": "move",
    "writes": "write",
    "makes": "make",
    "ensures": "ensure",
    "handles": "handle",
    "pass": "pass",
    "process": "process",
    "address": "address",
    "suppress": "suppress",
    "compress": "compress",
    "access": "access",
}


def _lemmatize_verb(token: str) -> str:
    if token in _LEMMA_EXCEPTIONS:
        return _LEMMA_EXCEPTIONS[token]
    if token.endswith("ing") and len(token) > 5:
        return token[:-3]
    if token.endswith("ed") and len(token) > 4:
        return token[:-2]
    if token.endswith("s") and not token.endswith("ss") and len(token) > 3:
        return token[:-1]
    return token


def parse_root_verb(instruction: str) -> tuple[str, str]:
    """Heuristic (root verb, direct object) extraction.

    The first token, lowercased and lightly lemmatized, is the verb. The
    object is the head (last token) of the first run of non-stopword tokens
    after it, stopping at prepositions and similar boundary words.
    """
    tokens = [t.strip(".,;:!?\"'()") for t in instruction.split()]
    tokens = [t for t in tokens if t]
    if not tokens:
        raise ValueError("instruction must be nonempty")
    verb = _lemmatize_verb(tokens[0].lower())
    span: list[str] = []
    for token in tokens[1:]:
        lowered = token.lower()
        if lowered in _ARTICLES:
            if span:
                break
            continue
        if lowered in _SPAN_BOUNDARIES:
            if span:
                break
            continue
        span.append(lowered)
    return verb, (span[-1] if span else "")


def _summary(values: list[int]) -> dict:
    arr = np.asarray(values, dtype=float)
    return {
        "mean": float(arr.mean()),
        "p25": float(np.percentile(arr, 25)),
        "p50": float(np.percentile(arr, 50)),
        "p75": float(np.percentile(arr, 75)),
        "min": float(arr.min()),
        "max": float(arr.max()),
    }


@dataclass
class CorpusStats:
    count: int
    token_lengths: dict
    mean_n_diff: float
    mean_r_diff: float
    verb_object: dict
    intent_histogram: dict
    bin_counts: dict

    def to_json(self) -> str:
        return json.dumps(
            {
                "count": self.count,
                "token_lengths": self.token_lengths,
                "mean_n_diff": self.mean_n_diff,
                "mean_r_diff": self.mean_r_diff,
                "verb_object": self.verb_object,
                "intent_histogram": self.intent_histogram,
                "bin_counts": self.bin_counts,
            },
            ensure_ascii=False,
            sort_keys=True,
            indent=2,
        ) + "\n"


def compute_stats(
    pool: TaskPool, tokenizer: Callable[[str], int] = whitespace_tokens
) -> CorpusStats:
    """Derive corpus statistics; never authoritative, always recomputable."""
    if not pool.instances:
        raise ValueError("cannot compute stats over an empty pool")
    instances = list(pool.instances.values())
    token_lengths = {
        "instruction": _summary([tokenizer(i.instruction) for i in instances]),
        "input": _summary([tokenizer(i.input_code) for i in instances]),
        "output": _summary([tokenizer(i.output_code) for i in instances]),
    }
    verb_object: dict[str, dict[str, int]] = {}
    for inst in instances:
        verb, obj = parse_root_verb(inst.instruction)
        verb_object.setdefault(verb, {}).setdefault(obj, 0)
        verb_object[verb][obj] += 1
    intent_histogram: dict[str, int] = {}
    for inst in instances:
        key = inst.intent or "(unclassified)"
        intent_histogram[key] = intent_histogram.get(key, 0) + 1
    bin_counts = {str(b): 0 for b in range(1, BIN_COUNT + 1)}
    for inst in instances:
        bin_counts[str(inst.diff.bin)] += 1
    return CorpusStats(
        count=len(instances),
        token_lengths=token_lengths,
        mean_n_diff=float(np.mean([i.diff.n_diff for i in instances])),
        mean_r_diff=float(np.mean([i.diff.r_diff for i in instances])),
        verb_object=verb_object,
        intent_histogram=intent_histogram,
        bin_counts=bin_counts,
    )
