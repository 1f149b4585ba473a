"""Chat-completion contract with a deterministic mock and an HTTP backend.

Every generation step goes through a ChatClient. The mock backend answers
purely from a stable hash of the rendered prompt: explicit canned responses
take priority, and an optional synthesizer fabricates stage-appropriate text
for anything else, so full pipeline runs are reproducible offline.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import random
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from typing import Protocol

from . import prompts

logger = logging.getLogger(__name__)

API_KEY_ENV = "EDITFORGE_LLM_API_KEY"

DEFAULT_MAX_RETRIES = 3
DEFAULT_BACKOFF_SECONDS = 1.0


class ChatError(Exception):
    """Transport or protocol failure talking to a chat backend."""


def prompt_key(prompt: str) -> str:
    """Stable lookup key for a rendered prompt."""
    return hashlib.sha256(prompt.encode("utf-8")).hexdigest()


class ChatClient(Protocol):
    model_tag: str

    def complete(self, prompt: str, temperature: float = 1.0) -> str: ...


@dataclass(frozen=True)
class LLMExchange:
    """One prompt/response round trip, kept for provenance."""

    exchange_id: str
    prompt: str
    response: str
    model_tag: str
    temperature: float
    attempt: int
    timestamp: float


class ExchangeLog:
    """Collects exchanges and hands out content-derived ids.

    Ids depend only on (prompt, response, model_tag, attempt), so reruns and
    resumed runs assign identical provenance. An optional JSONL sink persists
    the full exchanges for audit.
    """

    def __init__(self, sink: str | Path | None = None):
        self._sink = Path(sink) if sink else None
        if self._sink:
            self._sink.parent.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self.exchanges: dict[str, LLMExchange] = {}

    def record(
        self,
        prompt: str,
        response: str,
        model_tag: str,
        temperature: float,
        attempt: int,
    ) -> str:
        digest = hashlib.sha256(
            json.dumps(
                [prompt, response, model_tag, attempt], ensure_ascii=False
            ).encode("utf-8")
        ).hexdigest()
        exchange_id = f"x{digest[:16]}"
        exchange = LLMExchange(
            exchange_id=exchange_id,
            prompt=prompt,
            response=response,
            model_tag=model_tag,
            temperature=temperature,
            attempt=attempt,
            timestamp=time.time(),
        )
        with self._lock:
            if exchange_id not in self.exchanges:
                self.exchanges[exchange_id] = exchange
                if self._sink:
                    with self._sink.open("a", encoding="utf-8") as handle:
                        handle.write(
                            json.dumps(
                                {
                                    "id": exchange_id,
                                    "prompt": prompt,
                                    "response": response,
                                    "model_tag": model_tag,
                                    "temperature": temperature,
                                    "attempt": attempt,
                                    "timestamp": exchange.timestamp,
                                },
                                ensure_ascii=False,
                            )
                            + "\n"
                        )
        return exchange_id


# ---------------------------------------------------------------------------
# Mock backend
# ---------------------------------------------------------------------------

_VERBS = (
    "add remove refactor rename optimize simplify document annotate validate "
    "cache log parallelize vectorize sanitize encrypt compress paginate retry "
    "memoize modularize deduplicate normalize instrument harden localize "
    "profile batch stream throttle serialize migrate wrap extract inline "
    "guard audit mask shard archive prefetch debounce benchmark stub trace"
).split()

_ADJECTIVES = (
    "legacy nested brittle verbose duplicated recursive blocking async stale "
    "unchecked global mutable hardcoded deprecated tangled monolithic flaky "
    "unbounded eager lazy sequential transient orphaned implicit noisy "
    "redundant shadowed leaky opaque sprawling unsafe untyped manual chatty "
    "oversized fragile ad-hoc synchronous temporary experimental"
).split()

_NOUNS = (
    "parser scheduler serializer validator aggregator dispatcher tokenizer "
    "formatter uploader downloader resolver planner encoder decoder sampler "
    "watcher exporter importer notifier paginator allocator balancer crawler "
    "indexer compressor renderer mapper reducer collector emitter limiter "
    "router matcher merger splitter profiler logger fetcher builder manager "
    "interceptor translator monitor registry adapter gateway broker cache "
    "pipeline queue"
).split()

_DOMAINS = (
    "billing inventory telemetry onboarding checkout analytics geolocation "
    "recommendation moderation archival forecasting ticketing payroll "
    "brewing robotics genomics astronomy logistics auction translation "
    "streaming irrigation insurance museum fitness weather voting library "
    "aviation recycling orchard"
).split()

_GOALS = (
    "fail fast on malformed records",
    "cut peak memory usage",
    "survive network partitions",
    "emit structured events",
    "stay within the rate limit",
    "support incremental updates",
    "preserve insertion order",
    "avoid redundant recomputation",
    "expose progress to callers",
    "recover from partial writes",
    "honor the shutdown signal",
    "reuse pooled connections",
    "report actionable errors",
    "handle unicode input safely",
    "tolerate clock skew",
    "keep results reproducible",
)

_STRUCTURES = (
    "{verb} the {adj} {noun} in the {domain} service",
    "{verb} {article} {adj} {noun} so it can {goal}",
    "{verb} the {noun} used by the {domain} pipeline to {goal}",
    "{verb} every {adj} {noun} across the {domain} package",
    "{verb} the {domain} {noun} and make sure it will {goal}",
    "{verb} {article} {noun} for the {domain} dashboard",
    "in the {domain} module, {verb} the {adj} {noun}",
    "{verb} the {adj} {noun} behind the {domain} api to {goal}",
)


def _prompt_rng(prompt: str, salt: str = "") -> random.Random:
    digest = hashlib.sha256((salt + prompt).encode("utf-8")).digest()
    return random.Random(int.from_bytes(digest[:8], "big"))


def _synth_instruction(rng: random.Random) -> str:
    structure = rng.choice(_STRUCTURES)
    verb = rng.choice(_VERBS)
    text = structure.format(
        verb=verb,
        article=rng.choice(("a", "the")),
        adj=rng.choice(_ADJECTIVES),
        noun=rng.choice(_NOUNS),
        domain=rng.choice(_DOMAINS),
        goal=rng.choice(_GOALS),
    )
    return text[0].upper() + text[1:]


def _synth_code(rng: random.Random) -> list[str]:
    noun = rng.choice(_NOUNS)
    domain = rng.choice(_DOMAINS)
    items = f"{domain}_{rng.choice(_NOUNS)}s"
    lines = [
        f"def {rng.choice(_VERBS)}_{noun}({items}):",
        "    results = []",
        f"    for entry in {items}:",
    ]
    for i in range(rng.randrange(2, 14)):
        var = f"{rng.choice(_ADJECTIVES).replace('-', '_')}_{i}"
        lines.append(f"        {var} = entry.get('{rng.choice(_NOUNS)}_{i}')")
    lines.append("        results.append(entry)")
    lines.append("    return results")
    return lines


def _synth_instance(rng: random.Random) -> str:
    input_lines = _synth_code(rng)
    output_lines = list(input_lines)
    body = range(1, len(output_lines))
    # Change a hash-chosen slice of lines so edit ratios spread across bins.
    n_changes = rng.randrange(1, len(output_lines))
    for idx in rng.sample(list(body), min(n_changes, len(output_lines) - 1)):
        output_lines[idx] = output_lines[idx].split(" =")[0].rstrip() + (
            f" = checked(entry, '{rng.choice(_NOUNS)}_{rng.randrange(99)}')"
            if "=" in output_lines[idx]
            else f"  # reviewed {rng.choice(_NOUNS)}"
        )
    if rng.random() < 0.4:
        output_lines.append(f"    # verified for {rng.choice(_DOMAINS)} use")
    input_code = "\n".join(input_lines)
    output_code = "\n".join(output_lines)
    if output_code == input_code:
        output_lines.append("    return results[:1]")
        output_code = "\n".join(output_lines)
    return (
        "Here is the example.\n\nInput code:\n```python\n"
        + input_code
        + "\n```\n\nOutput code:\n```python\n"
        + output_code
        + "\n```\n"
    )


def _labels_from_prompt(prompt: str) -> list[str]:
    return [
        line[2:].strip()
        for line in prompt.splitlines()
        if line.startswith("- ") and line[2:].strip()
    ]


def synthesize_response(prompt: str, defaults: prompts.PromptLibrary) -> str:
    """Fabricate a deterministic, stage-appropriate response for a prompt.

    The stage is recognized by the shipped template body at the start of the
    prompt; unknown prompts get a generic echo so tests fail loudly rather
    than silently parsing garbage.
    """
    rng = _prompt_rng(prompt)
    if prompt.startswith(defaults.body("instruction_gen")):
        count = rng.randrange(3, 7)
        lines = [f"{i}. {_synth_instruction(rng)}" for i in range(1, count + 1)]
        return "\n".join(lines) + "\n"
    if prompt.startswith(defaults.body("scenario_gen")):
        lines = [
            f"{i}. A {rng.choice(_ADJECTIVES)} {rng.choice(_DOMAINS)} team "
            f"maintaining a {rng.choice(_NOUNS)} during {rng.choice(_DOMAINS)} "
            f"season"
            for i in range(1, 11)
        ]
        return "\n".join(lines) + "\n"
    if prompt.startswith(defaults.body("instance_gen")):
        return _synth_instance(rng)
    if prompt.startswith(defaults.body("judge")):
        return "Yes." if rng.random() < 0.75 else "No."
    if prompt.startswith(defaults.body("message_rewrite")):
        return (
            f"{_synth_instruction(rng)}."
            if rng.random() < 0.97
            else ""  # occasional empty rewrite exercises the parked path
        )
    if prompt.startswith(defaults.body("intent_classify")):
        labels = _labels_from_prompt(prompt)
        return rng.choice(labels) if labels else "other"
    return f"(mock) unrecognized prompt {prompt_key(prompt)[:12]}"


class MockChatClient:
    """Offline backend keyed by a stable hash of the rendered prompt.

    responses maps prompt keys (or raw prompt texts) to canned replies; when
    synthesize is on, unmatched prompts fall through to the deterministic
    synthesizer instead of raising.
    """

    model_tag = "mock"

    def __init__(
        self,
        responses: dict[str, str] | None = None,
        synthesize: bool = True,
        library: prompts.PromptLibrary | None = None,
    ):
        self._responses: dict[str, str] = {}
        self._synthesize = synthesize
        self._library = library or prompts.PromptLibrary.defaults()
        self.calls: list[str] = []
        for key, value in (responses or {}).items():
            self.respond_to(key, value)

    def respond_to(self, prompt_or_key: str, response: str) -> None:
        key = (
            prompt_or_key
            if len(prompt_or_key) == 64 and all(c in "0123456789abcdef" for c in prompt_or_key)
            else prompt_key(prompt_or_key)
        )
        self._responses[key] = response

    def complete(self, prompt: str, temperature: float = 1.0) -> str:
        self.calls.append(prompt)
        key = prompt_key(prompt)
        if key in self._responses:
            return self._responses[key]
        if self._synthesize:
            return synthesize_response(prompt, self._library)
        raise ChatError(f"no canned response for prompt key {key[:12]}")


# ---------------------------------------------------------------------------
# HTTP backend
# ---------------------------------------------------------------------------

class HttpChatClient:
    """OpenAI-style chat-completions backend with retries and backoff.

    The API key comes from configuration or the EDITFORGE_LLM_API_KEY
    environment variable. In-flight requests are bounded by max_concurrency.
    """

    def __init__(
        self,
        endpoint: str,
        model: str,
        api_key: str | None = None,
        max_retries: int = DEFAULT_MAX_RETRIES,
        backoff_seconds: float = DEFAULT_BACKOFF_SECONDS,
        max_concurrency: int = 4,
        timeout: float = 120.0,
    ):
        import httpx

        self.endpoint = endpoint.rstrip("/")
        self.model_tag = model
        self.api_key = api_key or os.environ.get(API_KEY_ENV, "")
        self.max_retries = max_retries
        self.backoff_seconds = backoff_seconds
        self._semaphore = threading.Semaphore(max_concurrency)
        self._client = httpx.Client(timeout=timeout)

    def complete(self, prompt: str, temperature: float = 1.0) -> str:
        body = {
            "model": self.model_tag,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": temperature,
        }
        headers = {"Authorization": f"Bearer {self.api_key}"}
        last_error: Exception | None = None
        for attempt in range(self.max_retries):
            try:
                with self._semaphore:
                    response = self._client.post(
                        f"{self.endpoint}/chat/completions", json=body, headers=headers
                    )
                if response.status_code == 429 or response.status_code >= 500:
                    last_error = ChatError(
                        f"backend returned {response.status_code}: {response.text[:200]}"
                    )
                elif response.status_code >= 400:
                    raise ChatError(
                        f"backend rejected request ({response.status_code}): "
                        f"{response.text[:200]}"
                    )
                else:
                    payload = response.json()
                    return payload["choices"][0]["message"]["content"]
            except ChatError:
                raise
            except Exception as exc:  # transport errors are retryable
                last_error = ChatError(f"transport failure: {exc}")
            if attempt < self.max_retries - 1:
                delay = self.backoff_seconds * (2**attempt)
                logger.warning(
                    "chat request failed (attempt %d/%d), retrying in %.1fs: %s",
                    attempt + 1,
                    self.max_retries,
                    delay,
                    last_error,
                )
                time.sleep(delay)
        assert last_error is not None
        raise last_error
