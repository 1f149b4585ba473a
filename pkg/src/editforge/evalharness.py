"""Judge model edits with an LLM and aggregate blind human scores.

Model outputs are wrapped in EvalRecords whose anon ids hide the producing
model; the anon_id -> model mapping never leaves the suite. Reports combine
judge accuracy (overall and per edit-ratio bin) with per-model human score
breakdowns and the human/judge agreement ratio.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping

from .diffstats import BIN_COUNT, DiffStats
from .llm import ChatClient, ExchangeLog
from .orchestrator import judge_response
from .prompts import PromptLibrary

HUMAN_SCORE_LEVELS = ("correct", "partial", "wrong")
_SEVERITY = {"correct": 0, "partial": 1, "wrong": 2}


@dataclass
class EvalRecord:
    sample_id: str
    instruction: str
    input_code: str
    model_output: str
    anon_id: str
    judge_verdict: str | None = None  #"yes" | "no"
    unjudged: bool = False
    judge_exchange_ids: tuple[str, ...] = ()
    human_scores: dict[str, str] = field(default_factory=dict)  # rater -> level

    def rater_payload(self) -> dict:
        """The rater-visible body; carries no model-identifying field."""
        return {
            "anon_id": self.anon_id,
            "instruction": self.instruction,
            "input": self.input_code,
            "model_output": self.model_output,
        }


class EvalSuite:
    """Shuffled, anonymized evaluation records plus the private model map."""

    def __init__(self, records: list[EvalRecord], model_of: dict[str, str]):
        self.records = records
        self._model_of = model_of

    @classmethod
    def from_entries(cls, entries: Iterable[Mapping], rng: random.Random) -> "EvalSuite":
        """Build a suite from {sample_id, instruction, input, model_output,
        model_tag} entries; order is shuffled and anon ids assigned after the
        shuffle so position reveals nothing."""
        pending = list(entries)
        rng.shuffle(pending)
        records: list[EvalRecord] = []
        model_of: dict[str, str] = {}
        for i, entry in enumerate(pending):
            anon_id = f"sample-{i + 1:04d}"
            records.append(
                EvalRecord(
                    sample_id=entry["sample_id"],
                    instruction=entry["instruction"],
                    input_code=entry["input"],
                    model_output=entry["model_output"],
                    anon_id=anon_id,
                )
            )
            model_of[anon_id] = entry["model_tag"]
        return cls(records, model_of)

    def model_of(self, anon_id: str) -> str:
        return self._model_of[anon_id]

    def by_anon_id(self, anon_id: str) -> EvalRecord | None:
        for record in self.records:
            if record.anon_id == anon_id:
                return record
        return None


def load_eval_entries(path: str | Path) -> list[dict]:
    """Read the eval input file: JSONL of sample/instruction/input/output."""
    entries = []
    for line in Path(path).read_text(encoding="utf-8").splitlines():
        if line.strip():
            entries.append(json.loads(line))
    return entries


def judge_with_llm(
    record: EvalRecord,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
) -> str | None:
    """Judge one record; stores the verdict and exchange provenance.

    A response with neither token after retries leaves the verdict unset and
    flags the record unjudged.
    """
    if not record.model_output:
        raise ValueError("model_output must be nonempty")
    verdict, exchange_ids = judge_response(
        record.instruction, record.input_code, record.model_output, client, library, log
    )
    record.judge_exchange_ids = tuple(exchange_ids)
    if verdict is None:
        record.unjudged = True
    else:
        record.judge_verdict = verdict
    return verdict


# ---------------------------------------------------------------------------
# Human scoring
# ---------------------------------------------------------------------------

def record_human_scores(
    suite: EvalSuite, entries: Iterable[tuple[str, str, str]]
) -> tuple[int, list[tuple[str, str, str]]]:
    """Apply (rater_id, anon_id, score) entries as idempotent upserts.

    Unknown anon ids and unknown score levels are rejected, not raised, so a
    partially bad sheet still lands. Returns (accepted, rejected entries).
    """
    accepted = 0
    rejected: list[tuple[str, str, str]] = []
    for rater_id, anon_id, score in entries:
        record = suite.by_anon_id(anon_id)
        if record is None or score not in HUMAN_SCORE_LEVELS:
            rejected.append((rater_id, anon_id, score))
            continue
        record.human_scores[rater_id] = score
        accepted += 1
    return accepted, rejected


def majority_score(scores: Iterable[str]) -> str:
    """Most common level; ties break toward the worse score."""
    counts: dict[str, int] = {}
    for score in scores:
        counts[score] = counts.get(score, 0) + 1
    if not counts:
        raise ValueError("no scores to aggregate")
    top = max(counts.values())
    return max(
        (level for level, n in counts.items() if n == top),
        key=lambda level: _SEVERITY[level],
    )


def human_breakdown(suite: EvalSuite) -> dict[str, dict[str, float]]:
    """Per-model (correct%, partial%, wrong%), averaged over raters.

    Each rater contributes their own per-level fractions over the samples of
    a model they scored; the model's breakdown is the mean across raters.
    """
    per_model_rater: dict[str, dict[str, dict[str, int]]] = {}
    for record in suite.records:
        model = suite.model_of(record.anon_id)
        for rater, score in record.human_scores.items():
            cell = per_model_rater.setdefault(model, {}).setdefault(
                rater, {level: 0 for level in HUMAN_SCORE_LEVELS}
            )
            cell[score] += 1
    breakdown: dict[str, dict[str, float]] = {}
    for model, raters in per_model_rater.items():
        sums = {level: 0.0 for level in HUMAN_SCORE_LEVELS}
        for counts in raters.values():
            total = sum(counts.values())
            for level in HUMAN_SCORE_LEVELS:
                sums[level] += 100.0 * counts[level] / total
        breakdown[model] = {
            level: sums[level] / len(raters) for level in HUMAN_SCORE_LEVELS
        }
    return breakdown


def human_judge_agreement(records: Iterable[EvalRecord]) -> float:
    """Fraction of dual-signal records where the judge matches the humans.

    The human majority maps to a binary label with partial counted as
    correct; agreement compares that label with the yes/no verdict.
    """
    hits = 0
    total = 0
    for record in records:
        if record.judge_verdict is None or not record.human_scores:
            continue
        human_ok = majority_score(record.human_scores.values()) in ("correct", "partial")
        judge_ok = record.judge_verdict == "yes"
        hits += human_ok == judge_ok
        total += 1
    if total == 0:
        raise ValueError("no records carry both a verdict and human scores")
    return hits / total


# ---------------------------------------------------------------------------
# Reports
# ---------------------------------------------------------------------------

@dataclass
class EvalReport:
    overall_accuracy: float
    per_bin_accuracy: dict[int, float | None]
    judged_count: int
    unjudged_count: int
    per_bin_judged: dict[int, int]
    human_breakdown: dict[str, dict[str, float]]
    agreement: float | None

    def to_json_obj(self) -> dict:
        return {
            "overall_accuracy": self.overall_accuracy,
            "per_bin_accuracy": {str(k): v for k, v in self.per_bin_accuracy.items()},
            "judged_count": self.judged_count,
            "unjudged_count": self.unjudged_count,
            "per_bin_judged": {str(k): v for k, v in self.per_bin_judged.items()},
            "human_breakdown": self.human_breakdown,
            "agreement": self.agreement,
        }

    def text_table(self) -> str:
        lines = [
            f"judged: {self.judged_count}   unjudged: {self.unjudged_count}",
            f"overall accuracy: {self.overall_accuracy:.3f}",
            "edit-ratio bin accuracy:",
        ]
        for b in range(1, BIN_COUNT + 1):
            acc = self.per_bin_accuracy.get(b)
            shown = f"{acc:.3f}" if acc is not None else "-"
            lines.append(f"  bin {b}: {shown}  (n={self.per_bin_judged.get(b, 0)})")
        if self.human_breakdown:
            lines.append("human breakdown (correct/partial/wrong %):")
            for model, levels in sorted(self.human_breakdown.items()):
                lines.append(
                    f"  {model}: {levels['correct']:.1f} / "
                    f"{levels['partial']:.1f} / {levels['wrong']:.1f}"
                )
        if self.agreement is not None:
            lines.append(f"human/judge agreement: {self.agreement:.3f}")
        return "\n".join(lines) + "\n"


def build_eval_report(
    records: Iterable[EvalRecord],
    diffs: Mapping[str, DiffStats],
    suite: EvalSuite | None = None,
) -> EvalReport:
    """Aggregate judged records into accuracies.

    diffs maps sample_id to the REFERENCE edit's DiffStats (gold output vs
    input), which assigns each sample its edit-ratio bin. Unjudged records
    are excluded from accuracy and counted separately; an empty bin reports
    an absent accuracy, never zero.
    """
    records = list(records)
    judged = [r for r in records if r.judge_verdict is not None]
    if not judged:
        raise ValueError("need at least one judged record")
    unjudged = sum(1 for r in records if r.judge_verdict is None)

    yes_total = sum(1 for r in judged if r.judge_verdict == "yes")
    per_bin_yes = {b: 0 for b in range(1, BIN_COUNT + 1)}
    per_bin_judged = {b: 0 for b in range(1, BIN_COUNT + 1)}
    for record in judged:
        b = diffs[record.sample_id].bin
        per_bin_judged[b] += 1
        if record.judge_verdict == "yes":
            per_bin_yes[b] += 1
    per_bin_accuracy: dict[int, float | None] = {
        b: (per_bin_yes[b] / per_bin_judged[b] if per_bin_judged[b] else None)
        for b in range(1, BIN_COUNT + 1)
    }

    breakdown = human_breakdown(suite) if suite is not None else {}
    agreement: float | None
    try:
        agreement = human_judge_agreement(records)
    except ValueError:
        agreement = None

    return EvalReport(
        overall_accuracy=yes_total / len(judged),
        per_bin_accuracy=per_bin_accuracy,
        judged_count=len(judged),
        unjudged_count=unjudged,
        per_bin_judged=per_bin_judged,
        human_breakdown=breakdown,
        agreement=agreement,
    )
