"""LLM-backed generation steps: bootstrapping, scenarios, instances,
commit-message rewriting, and intent classification.

Each step renders a prompt, calls the chat client with bounded retries, and
parses the response under a fixed grammar (numbered lists, fenced code
blocks, single tokens). Parse failures retry with the same inputs and then
fail soft, leaving a logged reason for the run report.
"""

from __future__ import annotations

import logging
import random
import re
from dataclasses import dataclass, field

from .llm import ChatClient, ExchangeLog
from .prompts import (
    PromptLibrary,
    render_instance_gen,
    render_instruction_gen,
    render_intent_classify,
    render_judge,
    render_message_rewrite,
    render_scenario_gen,
)

logger = logging.getLogger(__name__)

DEFAULT_MAX_RETRIES = 3
GENERATION_TEMPERATURE = 1.0
DECISION_TEMPERATURE = 0.0

_NUMBERED_LINE = re.compile(r"^\s*\d+[.)]\s+(.*\S)\s*$")
_FENCED_BLOCK = re.compile(r"```[^\n]*\n(.*?)```", re.DOTALL)
_YES_NO = re.compile(r"\b(yes|no)\b", re.IGNORECASE)


@dataclass
class InstructionCandidate:
    text: str
    source: str  # seed_commit | seed_curated | generated
    exemplar_ids: list[str] = field(default_factory=list)
    exchange_id: str | None = None


@dataclass
class Scenario:
    text: str
    instruction_id: str
    selected: bool = False


@dataclass
class BootstrapResult:
    candidates: list[InstructionCandidate]
    exemplar_ids: list[str]
    exchange_ids: list[str]
    skipped: bool = False


@dataclass
class ScenarioResult:
    scenarios: list[Scenario]
    selected: str  # empty string in degenerate mode
    exchange_ids: list[str]
    degenerate: bool = False


@dataclass
class InstanceResult:
    input_code: str | None
    output_code: str | None
    exchange_ids: list[str]
    reason: str | None = None  # block_count | input_equals_output on failure

    @property
    def ok(self) -> bool:
        return self.reason is None


def parse_numbered_list(text: str) -> list[str]:
    """Items of a numbered list, one per line ("1. foo" or "2) bar")."""
    return [m.group(1) for line in text.splitlines() if (m := _NUMBERED_LINE.match(line))]


def parse_fenced_blocks(text: str) -> list[str]:
    """Contents of all fenced code blocks, trailing newline stripped."""
    return [block.rstrip("\n") for block in _FENCED_BLOCK.findall(text)]


def _attempt(
    client: ChatClient,
    log: ExchangeLog,
    prompt: str,
    temperature: float,
    attempt: int,
) -> tuple[str, str]:
    """One client call, recorded; returns (response, exchange_id)."""
    response = client.complete(prompt, temperature=temperature)
    exchange_id = log.record(prompt, response, client.model_tag, temperature, attempt)
    return response, exchange_id


def bootstrap_instructions(
    seed_pool: list[tuple[str, str]],
    generated_pool: list[tuple[str, str]],
    rng: random.Random,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
    seeds_per_prompt: int = 7,
    generated_per_prompt: int = 1,
    intent: str | None = None,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> BootstrapResult:
    """One bootstrap round: sample exemplars, prompt, parse new instructions.

    Exemplars are seeds_per_prompt seed instructions plus generated_per_prompt
    previously generated ones, sampled without replacement. When no generated
    instruction exists yet (round zero), the full exemplar budget is drawn
    from seeds instead.
    """
    total = seeds_per_prompt + generated_per_prompt
    if generated_pool:
        if len(seed_pool) < seeds_per_prompt or len(generated_pool) < generated_per_prompt:
            raise ValueError(
                f"need {seeds_per_prompt} seed and {generated_per_prompt} generated "
                f"instructions, have {len(seed_pool)}/{len(generated_pool)}"
            )
        exemplars = rng.sample(seed_pool, seeds_per_prompt) + rng.sample(
            generated_pool, generated_per_prompt
        )
    else:
        if len(seed_pool) < total:
            raise ValueError(f"need {total} seed instructions for the first round, have {len(seed_pool)}")
        exemplars = rng.sample(seed_pool, total)

    exemplar_ids = [eid for eid, _ in exemplars]
    prompt = render_instruction_gen(
        library.body("instruction_gen"), [text for _, text in exemplars], intent=intent
    )

    exchange_ids: list[str] = []
    for attempt in range(1, max_retries + 1):
        response, exchange_id = _attempt(
            client, log, prompt, GENERATION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        items = parse_numbered_list(response)
        if items:
            candidates = [
                InstructionCandidate(
                    text=item,
                    source="generated",
                    exemplar_ids=list(exemplar_ids),
                    exchange_id=exchange_id,
                )
                for item in items
            ]
            return BootstrapResult(candidates, exemplar_ids, exchange_ids)
    logger.warning("bootstrap round skipped: no numbered list after %d attempts", max_retries)
    return BootstrapResult([], exemplar_ids, exchange_ids, skipped=True)


def generate_scenarios(
    instruction: InstructionCandidate,
    instruction_id: str,
    client: ChatClient,
    rng: random.Random,
    library: PromptLibrary,
    log: ExchangeLog,
    count: int = 10,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> ScenarioResult:
    """Generate up to `count` scenarios and pick one uniformly at random.

    If no scenario parses after retries the instruction proceeds with an
    empty scenario (degenerate mode, flagged for provenance).
    """
    prompt = render_scenario_gen(library.body("scenario_gen"), instruction.text)
    exchange_ids: list[str] = []
    for attempt in range(1, max_retries + 1):
        response, exchange_id = _attempt(
            client, log, prompt, GENERATION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        items = parse_numbered_list(response)[:count]
        if items:
            selected_index = rng.randrange(len(items))
            scenarios = [
                Scenario(text=text, instruction_id=instruction_id, selected=(i == selected_index))
                for i, text in enumerate(items)
            ]
            return ScenarioResult(scenarios, items[selected_index], exchange_ids)
    logger.warning("scenario generation degenerate for instruction %r", instruction.text[:60])
    return ScenarioResult([], "", exchange_ids, degenerate=True)


def generate_instance(
    instruction: InstructionCandidate,
    scenario: str,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> InstanceResult:
    """Generate an input/output code pair for an instruction and scenario.

    The response must contain exactly two fenced code blocks (input first),
    and the input must differ from the output.
    """
    if not instruction.text:
        raise ValueError("instruction text must be nonempty")
    prompt = render_instance_gen(library.body("instance_gen"), instruction.text, scenario)
    exchange_ids: list[str] = []
    reason = "block_count"
    for attempt in range(1, max_retries + 1):
        response, exchange_id = _attempt(
            client, log, prompt, GENERATION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        blocks = parse_fenced_blocks(response)
        if len(blocks) != 2:
            reason = "block_count"
            continue
        input_code, output_code = blocks
        if input_code == output_code:
            reason = "input_equals_output"
            continue
        return InstanceResult(input_code, output_code, exchange_ids)
    logger.info("instance discarded (%s) for instruction %r", reason, instruction.text[:60])
    return InstanceResult(None, None, exchange_ids, reason=reason)


def rewrite_commit_message(
    message: str,
    content_before: str,
    content_after: str,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> tuple[str | None, list[str]]:
    """Rewrite a commit message into a precise editing instruction.

    Returns (instruction, exchange_ids); instruction is None when every
    attempt came back empty, which parks the record for manual authoring.
    """
    prompt = render_message_rewrite(
        library.body("message_rewrite"), message, content_before, content_after
    )
    exchange_ids: list[str] = []
    for attempt in range(1, max_retries + 1):
        response, exchange_id = _attempt(
            client, log, prompt, GENERATION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        cleaned = _clean_single_sentence(response)
        if cleaned:
            return cleaned, exchange_ids
    return None, exchange_ids


def _clean_single_sentence(text: str) -> str:
    """First nonempty line, unquoted, whitespace-collapsed."""
    for line in text.splitlines():
        line = line.strip().strip('"').strip("'").strip()
        line = re.sub(r"^\d+[.)]\s*", "", line)
        line = " ".join(line.split())
        if line:
            return line
    return ""


def classify_intent(
    instruction: str,
    client: ChatClient,
    labels: list[str],
    library: PromptLibrary,
    log: ExchangeLog,
) -> tuple[str, list[str]]:
    """Assign one intent category to an instruction.

    Off-list responses are re-asked once with a firmer suffix, then fall back
    to "other". Returns (label, exchange_ids).
    """
    if not instruction:
        raise ValueError("instruction must be nonempty")
    if not labels:
        raise ValueError("labels must be nonempty")
    by_lower = {label.lower(): label for label in labels}
    prompt = render_intent_classify(library.body("intent_classify"), instruction, labels)
    exchange_ids: list[str] = []
    for attempt, extra in ((1, ""), (2, "\nAnswer with one listed category name and nothing else.")):
        response, exchange_id = _attempt(
            client, log, prompt + extra, DECISION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        normalized = response.strip().strip(".").lower()
        if normalized in by_lower:
            return by_lower[normalized], exchange_ids
    return "other", exchange_ids


def judge_response(
    instruction: str,
    input_code: str,
    model_output: str,
    client: ChatClient,
    library: PromptLibrary,
    log: ExchangeLog,
    max_retries: int = DEFAULT_MAX_RETRIES,
) -> tuple[str | None, list[str]]:
    """Render the judge prompt and parse the first yes/no token.

    Returns (verdict, exchange_ids) where verdict is "yes", "no", or None
    when neither token appeared after retries (record stays unjudged).
    """
    prompt = render_judge(library.body("judge"), instruction, input_code, model_output)
    exchange_ids: list[str] = []
    for attempt in range(1, max_retries + 1):
        response, exchange_id = _attempt(
            client, log, prompt, DECISION_TEMPERATURE, attempt
        )
        exchange_ids.append(exchange_id)
        match = _YES_NO.search(response)
        if match:
            return match.group(1).lower(), exchange_ids
    return None, exchange_ids
