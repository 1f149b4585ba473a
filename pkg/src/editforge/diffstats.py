"""Line-level edit complexity metrics for input/output code pairs.

A pair is summarized by the number of differing lines and its ratio,
computed over line *sets* (duplicate lines collapse). Ratios are mapped
onto five equal-width bins for downstream breakdowns.
"""

from __future__ import annotations

from dataclasses import dataclass

BIN_COUNT = 5


@dataclass(frozen=True)
class DiffStats:
    """Edit complexity of one input/output pair.

    n_diff: size of the symmetric difference of the two line sets.
    r_diff: n_diff over the size of the union (0 when both sets empty).
    bin: edit-ratio bin in 1..5.
    """

    n_diff: int
    r_diff: float
    bin: int


def line_set(text: str) -> frozenset[str]:
    """Split text into its set of lines; empty text gives the empty set."""
    return frozenset(text.splitlines())


def line_diff(input_code: str, output_code: str) -> DiffStats:
    """Compute DiffStats between two texts under line-set semantics.

    Lines are compared verbatim, with no whitespace normalization.
    n_diff = |I ∪ O| - |I ∩ O| for line sets I, O.
    """
    i_set = line_set(input_code)
    o_set = line_set(output_code)
    union = len(i_set | o_set)
    n_diff = union - len(i_set & o_set)
    r_diff = n_diff / union if union > 0 else 0.0
    return DiffStats(n_diff=n_diff, r_diff=r_diff, bin=edit_ratio_bin(r_diff))


def edit_ratio_bin(r_diff: float) -> int:
    """Map an edit ratio in [0, 1] to its bin.

    Edges are [0, 0.2), [0.2, 0.4), [0.4, 0.6), [0.6, 0.8), [0.8, 1.0];
    the last bin is closed at 1.0.
    """
    if not 0.0 <= r_diff <= 1.0:
        raise ValueError(f"edit ratio must be within [0, 1], got {r_diff!r}")
    # Explicit edge comparisons; int(r / width) misbins floats like 3/5.
    if r_diff < 0.2:
        return 1
    if r_diff < 0.4:
        return 2
    if r_diff < 0.6:
        return 3
    if r_diff < 0.8:
        return 4
    return 5
