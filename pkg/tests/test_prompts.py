"""Prompt templates: shipped bodies, overrides, slot filling."""

from editforge.prompts import (
    INTENT_CATEGORIES,
    PromptLibrary,
    render_instance_gen,
    render_instruction_gen,
    render_intent_classify,
    render_judge,
)

# The four generation/judging bodies ship with this exact wording.
EXPECTED_BODIES = {
    "instruction_gen": (
        "Given the existing instructions, please generate a list of diverse "
        "python code editing instructions. The new instructions should address "
        "diverse editing tasks. Please ensure that the instructions are clear "
        "and diverse. Include any relevant variable names in the instruction."
    ),
    "scenario_gen": (
        "Given a python code editing task, please come up with 10 diverse "
        "scenarios concise description where this python code editing task "
        "could be performed or come from."
    ),
    "instance_gen": (
        "Given python code editing task instructions and their scenarios where "
        "the task instruction could be used, you need to come up with examples "
        "for the following code editing tasks. You need to generate input and "
        "output code pair and make sure your variable names are suitable for "
        "the scenario. The input code is related to the task instruction, but "
        "must NOT meet the task requirements. The output code fulfills the "
        "task requirements based on input code."
    ),
    "judge": (
        "Given a code editing instruction, please determine if the output is "
        'an acceptable edited code response to the instruction and input? '
        'Give "Yes" or "No".'
    ),
}


def test_shipped_bodies_are_verbatim():
    library = PromptLibrary.defaults()
    for name, expected in EXPECTED_BODIES.items():
        assert library.body(name) == expected


def test_intent_list_has_27_categories_with_other():
    assert len(INTENT_CATEGORIES) == 27
    assert "other" in INTENT_CATEGORIES


def test_from_dir_overrides_and_falls_back(tmp_path):
    (tmp_path / "judge.txt").write_text("Custom judge body {instruction}\n")
    library = PromptLibrary.from_dir(tmp_path)
    assert library.body("judge") == "Custom judge body {instruction}"
    assert library.body("scenario_gen") == EXPECTED_BODIES["scenario_gen"]


def test_slotted_body_substitutes_in_place():
    rendered = render_judge("Q: {instruction} | {input} -> {output}", "inst", "in", "out")
    assert rendered == "Q: inst | in -> out"


def test_plain_body_gets_appended_layout():
    rendered = render_instruction_gen("BODY", ["one", "two"])
    assert rendered.startswith("BODY")
    assert "1. one" in rendered and "2. two" in rendered
    assert rendered.rstrip().endswith("3.")


def test_code_braces_survive_rendering():
    # Substitution is replace-based; stray braces in code must not break it.
    rendered = render_instance_gen(
        "BODY", "Wrap the dict {k: v} access", "config = {'a': 1}"
    )
    assert "{k: v}" in rendered
    assert "{'a': 1}" in rendered


def test_intent_prompt_lists_labels():
    rendered = render_intent_classify("BODY", "add docs", ["x", "y"])
    assert "- x" in rendered and "- y" in rendered
