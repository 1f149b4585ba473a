"""Prompt templates for every LLM-backed step.

Template bodies live in editable text files; the shipped defaults for the
four generation/judging stages are fixed, and the rewrite/classify bodies
are original to this project. A body may embed ``{slot}`` markers; bodies
without markers get the standard slot layout appended, so the default files
stay clean prose.
"""

from __future__ import annotations

from dataclasses import dataclass
from importlib import resources
from pathlib import Path

TEMPLATE_NAMES = (
    "instruction_gen",
    "scenario_gen",
    "instance_gen",
    "judge",
    "message_rewrite",
    "intent_classify",
)

# Empirical editing-intent categories; a best-effort transcription,
# overridable through the pipeline config. "other" doubles as the fallback
# for off-list classifier replies.
INTENT_CATEGORIES = (
    "add functionality",
    "fix bug",
    "optimize code",
    "improve readability",
    "refactor code",
    "add documentation",
    "add error handling",
    "improve security",
    "add logging",
    "add tests",
    "rename identifiers",
    "remove redundancy",
    "update api usage",
    "improve performance",
    "add type annotations",
    "simplify logic",
    "improve maintainability",
    "add input validation",
    "upgrade dependencies",
    "improve code style",
    "add comments",
    "handle edge cases",
    "improve compatibility",
    "parallelize computation",
    "modularize code",
    "update configuration",
    "other",
)


@dataclass(frozen=True)
class PromptTemplate:
    name: str
    body: str


def _default_body(name: str) -> str:
    return (
        resources.files("editforge.prompt_defaults")
        .joinpath(f"{name}.txt")
        .read_text(encoding="utf-8")
        .strip()
    )


class PromptLibrary:
    """All six templates, loaded from a directory with built-in fallbacks."""

    def __init__(self, templates: dict[str, PromptTemplate]):
        missing = set(TEMPLATE_NAMES) - set(templates)
        if missing:
            raise ValueError(f"missing prompt templates: {sorted(missing)}")
        self._templates = templates

    @classmethod
    def defaults(cls) -> "PromptLibrary":
        return cls({name: PromptTemplate(name, _default_body(name)) for name in TEMPLATE_NAMES})

    @classmethod
    def from_dir(cls, directory: str | Path) -> "PromptLibrary":
        """Load templates from <dir>/<name>.txt, defaulting absent files."""
        directory = Path(directory)
        templates = {}
        for name in TEMPLATE_NAMES:
            path = directory / f"{name}.txt"
            if path.is_file():
                body = path.read_text(encoding="utf-8").strip()
            else:
                body = _default_body(name)
            templates[name] = PromptTemplate(name, body)
        return cls(templates)

    def body(self, name: str) -> str:
        return self._templates[name].body

    def __getitem__(self, name: str) -> PromptTemplate:
        return self._templates[name]


def _fill(body: str, slots: dict[str, str], appended_layout: str) -> str:
    """Substitute known {slot} markers; append the layout when none present."""
    if any("{" + key + "}" in body for key in slots):
        rendered = body
        for key, value in slots.items():
            rendered = rendered.replace("{" + key + "}", value)
        return rendered
    return body + appended_layout


def render_instruction_gen(
    body: str, exemplars: list[str], intent: str | None = None
) -> str:
    """Few-shot bootstrap prompt: numbered exemplars plus a continuation cue."""
    numbered = "\n".join(f"{i}. {text}" for i, text in enumerate(exemplars, start=1))
    intent_line = f"\n\nFocus on the following editing intent: {intent}." if intent else ""
    layout = (
        f"{intent_line}\n\nExisting instructions:\n{numbered}\n\n"
        f"New instructions:\n{len(exemplars) + 1}."
    )
    return _fill(body, {"exemplars": numbered, "intent": intent or ""}, layout)


def render_scenario_gen(body: str, instruction: str) -> str:
    layout = f"\n\nTask instruction: {instruction}\n\nScenarios:\n1."
    return _fill(body, {"instruction": instruction}, layout)


def render_instance_gen(body: str, instruction: str, scenario: str) -> str:
    scenario_line = f"\nScenario: {scenario}" if scenario else ""
    layout = (
        f"\n\nTask instruction: {instruction}{scenario_line}\n\n"
        "Reply with the input code followed by the output code, "
        "each in its own fenced code block."
    )
    return _fill(body, {"instruction": instruction, "scenario": scenario}, layout)


def render_judge(body: str, instruction: str, input_code: str, output_code: str) -> str:
    layout = (
        f"\n\nInstruction: {instruction}\n"
        f"Input:\n```python\n{input_code}\n```\n"
        f"Output:\n```python\n{output_code}\n```\n"
        "Answer:"
    )
    return _fill(
        body,
        {"instruction": instruction, "input": input_code, "output": output_code},
        layout,
    )


def render_message_rewrite(body: str, message: str, before: str, after: str) -> str:
    layout = (
        f"\n\nCommit message: {message}\n"
        f"Code before:\n```python\n{before}\n```\n"
        f"Code after:\n```python\n{after}\n```\n"
        "Instruction:"
    )
    return _fill(body, {"message": message, "before": before, "after": after}, layout)


def render_intent_classify(body: str, instruction: str, labels: list[str]) -> str:
    listed = "\n".join(f"- {label}" for label in labels)
    layout = f"\n\nCategories:\n{listed}\n\nInstruction: {instruction}\nCategory:"
    return _fill(body, {"instruction": instruction, "labels": listed}, layout)
