"""Line-diff metrics against a brute-force set oracle."""

import random

import pytest

from editforge.diffstats import DiffStats, edit_ratio_bin, line_diff


def oracle_stats(input_code: str, output_code: str) -> tuple[int, float]:
    """Independent oracle: materialize both line sets, count the symmetric
    difference directly."""
    i_set = set(input_code.splitlines())
    o_set = set(output_code.splitlines())
    sym = i_set.symmetric_difference(o_set)
    union = i_set.union(o_set)
    return len(sym), (len(sym) / len(union) if union else 0.0)


def random_code(rng: random.Random) -> str:
    lines = []
    for _ in range(rng.randrange(0, 30)):
        lines.append(
            rng.choice(
                [
                    "x = 1",
                    "y = compute(x)",
                    "return y",
                    "for item in items:",
                    "    total += item",
                    "print(total)",
                    "if ready:",
                    "    start()",
                    f"z_{rng.randrange(50)} = {rng.randrange(100)}",
                ]
            )
        )
    return "\n".join(lines)


def mutate(code: str, rng: random.Random) -> str:
    lines = code.splitlines()
    out = []
    for line in lines:
        roll = rng.random()
        if roll < 0.2:
            continue  # drop line
        if roll < 0.4:
            out.append(line + "  # changed")
            continue
        out.append(line)
    if rng.random() < 0.5:
        out.append("new_tail = True")
    return "\n".join(out)


def test_hand_example_two_changed_lines():
    stats = line_diff("a=1\nb=2\nc=3", "a=1\nb=20\nc=3")
    assert stats == DiffStats(n_diff=2, r_diff=0.5, bin=3)


def test_identical_texts():
    code = "def f():\n    return 1"
    stats = line_diff(code, code)
    assert stats.n_diff == 0
    assert stats.r_diff == 0.0
    assert stats.bin == 1


def test_empty_input_four_line_output():
    stats = line_diff("", "a\nb\nc\nd")
    assert stats.n_diff == 4
    assert stats.r_diff == 1.0
    assert stats.bin == 5


def test_both_empty():
    stats = line_diff("", "")
    assert stats.n_diff == 0
    assert stats.r_diff == 0.0


def test_duplicate_lines_collapse():
    # Set semantics: repeated identical lines count once.
    stats = line_diff("a\na\nb", "a\nb\nb")
    assert stats.n_diff == 0


def test_oracle_equivalence_100_random_pairs():
    rng = random.Random(20240817)
    for _ in range(100):
        a = random_code(rng)
        b = mutate(a, rng) if rng.random() < 0.7 else random_code(rng)
        stats = line_diff(a, b)
        n_exp, r_exp = oracle_stats(a, b)
        assert stats.n_diff == n_exp
        assert stats.r_diff == r_exp
        assert stats.bin == edit_ratio_bin(r_exp)


def test_symmetry():
    rng = random.Random(7)
    for _ in range(50):
        a, b = random_code(rng), random_code(rng)
        assert line_diff(a, b).n_diff == line_diff(b, a).n_diff


@pytest.mark.parametrize(
    "ratio,expected",
    [
        (0.0, 1),
        (0.19, 1),
        (0.2, 2),
        (0.39, 2),
        (0.4, 3),
        (0.52, 3),
        (0.6, 4),
        (0.79, 4),
        (0.8, 5),
        (1.0, 5),
        (3 / 5, 4),
    ],
)
def test_bin_edges(ratio, expected):
    assert edit_ratio_bin(ratio) == expected


def test_bin_rejects_out_of_range():
    with pytest.raises(ValueError):
        edit_ratio_bin(1.5)
    with pytest.raises(ValueError):
        edit_ratio_bin(-0.1)


def test_binning_is_total_partition():
    rng = random.Random(3)
    for _ in range(500):
        r = rng.random()
        assert edit_ratio_bin(r) in {1, 2, 3, 4, 5}
