"""Near-duplicate detection for instructions and code instances.

Instructions are compared with a ROUGE-L F1 score over whitespace tokens;
code instances are sketched with MinHash over character 5-gram shingles and
indexed with banded LSH for sub-quadratic candidate retrieval. LSH candidates
are always confirmed against exact Jaccard over the stored shingle sets, so
index false positives can never discard data.
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

ROUGE_DUP_THRESHOLD = 0.7
JACCARD_DUP_THRESHOLD = 0.75
DEFAULT_NUM_PERM = 128
DEFAULT_SHINGLE_WIDTH = 5
DEFAULT_MINHASH_SEED = 1

# 31-bit Mersenne prime: keeps a*h+b within uint64 for vectorized arithmetic.
_PRIME = (1 << 31) - 1

SNAPSHOT_FORMAT = "editforge-lsh/1"


# ---------------------------------------------------------------------------
# ROUGE-L
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RougeScore:
    """ROUGE-L F-measure in [0, 1]."""

    value: float


def _lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Length of the longest common subsequence of two token sequences."""
    if not a or not b:
        return 0
    # Single rolling row keeps memory at O(min side).
    if len(b) > len(a):
        a, b = b, a
    prev = [0] * (len(b) + 1)
    for tok_a in a:
        cur = [0] * (len(b) + 1)
        for j, tok_b in enumerate(b, start=1):
            if tok_a == tok_b:
                cur[j] = prev[j - 1] + 1
            else:
                cur[j] = max(prev[j], cur[j - 1])
        prev = cur
    return prev[len(b)]


def rouge_l(candidate: str, reference: str) -> RougeScore:
    """ROUGE-L F1 between two texts over lowercase whitespace tokens."""
    cand = candidate.lower().split()
    ref = reference.lower().split()
    if not cand or not ref:
        return RougeScore(0.0)
    lcs = _lcs_length(cand, ref)
    if lcs == 0:
        return RougeScore(0.0)
    precision = lcs / len(cand)
    recall = lcs / len(ref)
    return RougeScore(2 * precision * recall / (precision + recall))


def is_instruction_dup(
    candidate: str,
    pool: Iterable[tuple[str, str]],
    threshold: float = ROUGE_DUP_THRESHOLD,
    exclude_id: str | None = None,
) -> tuple[bool, float, str | None]:
    """Check a candidate instruction against the accepted pool.

    pool yields (id, text) pairs. Returns (is_dup, max_score, nearest_id)
    where is_dup is True iff some pool entry scores strictly above the
    threshold. exclude_id skips the candidate's own pool entry so a
    pre-admitted instruction does not match itself.
    """
    best_score = 0.0
    best_id: str | None = None
    for existing_id, existing_text in pool:
        if exclude_id is not None and existing_id == exclude_id:
            continue
        score = rouge_l(candidate, existing_text).value
        if score > best_score:
            best_score = score
            best_id = existing_id
    return best_score > threshold, best_score, best_id


# ---------------------------------------------------------------------------
# Shingling and MinHash
# ---------------------------------------------------------------------------

def code_shingles(code: str, width: int = DEFAULT_SHINGLE_WIDTH) -> frozenset[str]:
    """Character n-gram shingle set of a code text.

    Trailing whitespace is stripped per line before shingling. Text shorter
    than the shingle width becomes a single shingle of the whole text.
    """
    normalized = "\n".join(line.rstrip() for line in code.splitlines())
    if len(normalized) <= width:
        return frozenset({normalized})
    return frozenset(
        normalized[i : i + width] for i in range(len(normalized) - width + 1)
    )


def exact_jaccard(shingles_a: frozenset[str], shingles_b: frozenset[str]) -> float:
    """Exact Jaccard similarity of two shingle sets."""
    if not shingles_a and not shingles_b:
        return 1.0
    union = len(shingles_a | shingles_b)
    if union == 0:
        return 0.0
    return len(shingles_a & shingles_b) / union


def _base_hashes(shingles: frozenset[str]) -> np.ndarray:
    """Stable 31-bit base hash per shingle (independent of PYTHONHASHSEED)."""
    out = np.empty(len(shingles), dtype=np.uint64)
    for i, shingle in enumerate(sorted(shingles)):
        digest = hashlib.blake2b(shingle.encode("utf-8"), digest_size=8).digest()
        out[i] = int.from_bytes(digest, "big") % _PRIME
    return out


class MinHasher:
    """A seeded family of num_perm universal hash functions.

    Signatures from the same (num_perm, seed) pair are comparable; the
    fraction of agreeing positions estimates Jaccard similarity.
    """

    def __init__(self, num_perm: int = DEFAULT_NUM_PERM, seed: int = DEFAULT_MINHASH_SEED):
        if num_perm < 16:
            raise ValueError(f"num_perm must be at least 16, got {num_perm}")
        self.num_perm = num_perm
        self.seed = seed
        rng = random.Random(seed)
        self._a = np.array(
            [rng.randrange(1, _PRIME) for _ in range(num_perm)], dtype=np.uint64
        )
        self._b = np.array(
            [rng.randrange(0, _PRIME) for _ in range(num_perm)], dtype=np.uint64
        )

    def signature(self, shingles: frozenset[str]) -> np.ndarray:
        """MinHash signature: per-permutation minimum over the shingle set."""
        if not shingles:
            return np.full(self.num_perm, _PRIME, dtype=np.uint64)
        base = _base_hashes(shingles)
        # (n_shingles, num_perm); a*h < 2^62 so uint64 arithmetic is exact.
        table = (base[:, None] * self._a[None, :] + self._b[None, :]) % _PRIME
        return table.min(axis=0)


def estimate_jaccard(sig_a: np.ndarray, sig_b: np.ndarray) -> float:
    """Fraction of signature positions that agree."""
    if sig_a.shape != sig_b.shape:
        raise ValueError("signatures have mismatched num_perm")
    return float(np.count_nonzero(sig_a == sig_b) / sig_a.size)


def minhash_estimate(
    code_a: str,
    code_b: str,
    num_perm: int = DEFAULT_NUM_PERM,
    seed: int = DEFAULT_MINHASH_SEED,
) -> float:
    """Estimated Jaccard similarity of two code texts' shingle sets."""
    hasher = MinHasher(num_perm=num_perm, seed=seed)
    sig_a = hasher.signature(code_shingles(code_a))
    sig_b = hasher.signature(code_shingles(code_b))
    return estimate_jaccard(sig_a, sig_b)


# ---------------------------------------------------------------------------
# Banded LSH index with exact-Jaccard confirmation
# ---------------------------------------------------------------------------

def optimal_bands_rows(
    num_perm: int,
    threshold: float,
    fp_weight: float = 0.5,
    fn_weight: float = 0.5,
) -> tuple[int, int]:
    """Pick (bands, rows) with bands*rows = num_perm for a Jaccard threshold.

    Minimizes the weighted sum of the false-positive integral below the
    threshold and the false-negative integral above it, evaluated by
    midpoint quadrature on the band-collision probability 1-(1-s^r)^b.
    """
    steps = 1000
    best: tuple[float, int, int] | None = None
    for bands in range(1, num_perm + 1):
        if num_perm % bands:
            continue
        rows = num_perm // bands

        fp = 0.0
        dx = threshold / steps
        for i in range(steps):
            s = (i + 0.5) * dx
            fp += (1.0 - (1.0 - s**rows) ** bands) * dx
        fn = 0.0
        dx = (1.0 - threshold) / steps
        for i in range(steps):
            s = threshold + (i + 0.5) * dx
            fn += ((1.0 - s**rows) ** bands) * dx

        error = fp_weight * fp + fn_weight * fn
        if best is None or error < best[0]:
            best = (error, bands, rows)
    assert best is not None
    return best[1], best[2]


def _band_key(band_index: int, rows: np.ndarray) -> str:
    """Stable bucket key for one signature band."""
    payload = band_index.to_bytes(4, "big") + rows.tobytes()
    return hashlib.blake2b(payload, digest_size=8).hexdigest()


class LshIndex:
    """Banded MinHash index plus a shingle store for exact confirmation.

    Inserted ids are always retrievable as their own candidates (an id's
    signature collides with itself in every band).
    """

    def __init__(
        self,
        num_perm: int = DEFAULT_NUM_PERM,
        threshold: float = JACCARD_DUP_THRESHOLD,
        bands: int | None = None,
        rows: int | None = None,
        seed: int = DEFAULT_MINHASH_SEED,
        shingle_width: int = DEFAULT_SHINGLE_WIDTH,
    ):
        if (bands is None) != (rows is None):
            raise ValueError("bands and rows must be given together")
        if bands is None:
            bands, rows = optimal_bands_rows(num_perm, threshold)
        assert rows is not None
        if bands * rows != num_perm:
            raise ValueError(f"bands*rows must equal num_perm ({bands}*{rows} != {num_perm})")
        self.num_perm = num_perm
        self.threshold = threshold
        self.bands = bands
        self.rows = rows
        self.shingle_width = shingle_width
        self.hasher = MinHasher(num_perm=num_perm, seed=seed)
        self._buckets: list[dict[str, set[str]]] = [dict() for _ in range(bands)]
        self._shingles: dict[str, frozenset[str]] = {}

    def __len__(self) -> int:
        return len(self._shingles)

    def __contains__(self, member_id: str) -> bool:
        return member_id in self._shingles

    def insert(self, member_id: str, code: str) -> None:
        """Index a code text under member_id."""
        if member_id in self._shingles:
            raise ValueError(f"id already indexed: {member_id}")
        self._insert_shingles(member_id, code_shingles(code, self.shingle_width))

    def candidates(self, code: str) -> list[str]:
        """Ids colliding with the query in at least one band, sorted."""
        signature = self.hasher.signature(code_shingles(code, self.shingle_width))
        found: set[str] = set()
        for band in range(self.bands):
            rows = signature[band * self.rows : (band + 1) * self.rows]
            bucket = self._buckets[band].get(_band_key(band, rows))
            if bucket:
                found.update(bucket)
        return sorted(found)

    def query(self, code: str) -> tuple[str, float] | None:
        """Best confirmed near-duplicate of the query, if any.

        Every LSH candidate is confirmed against exact Jaccard over stored
        shingle sets; returns (id, jaccard) of the best match strictly above
        the threshold, preferring the smallest id on ties.
        """
        query_shingles = code_shingles(code, self.shingle_width)
        best: tuple[str, float] | None = None
        for candidate_id in self.candidates(code):
            sim = exact_jaccard(query_shingles, self._shingles[candidate_id])
            if sim > self.threshold and (best is None or sim > best[1]):
                best = (candidate_id, sim)
        return best

    def shingles_of(self, member_id: str) -> frozenset[str]:
        return self._shingles[member_id]

    def member_ids(self) -> set[str]:
        return set(self._shingles)

    # -- persistence --------------------------------------------------------

    def save(self, path: str | Path) -> None:
        """Write a versioned text snapshot; signatures are recomputed on load."""
        payload = {
            "format": SNAPSHOT_FORMAT,
            "num_perm": self.num_perm,
            "threshold": self.threshold,
            "bands": self.bands,
            "rows": self.rows,
            "seed": self.hasher.seed,
            "shingle_width": self.shingle_width,
            "entries": {mid: sorted(sh) for mid, sh in self._shingles.items()},
        }
        Path(path).write_text(
            json.dumps(payload, ensure_ascii=False, sort_keys=True), encoding="utf-8"
        )

    @classmethod
    def load(cls, path: str | Path) -> "LshIndex":
        payload = json.loads(Path(path).read_text(encoding="utf-8"))
        if payload.get("format") != SNAPSHOT_FORMAT:
            raise ValueError(f"unsupported index snapshot format: {payload.get('format')!r}")
        index = cls(
            num_perm=payload["num_perm"],
            threshold=payload["threshold"],
            bands=payload["bands"],
            rows=payload["rows"],
            seed=payload["seed"],
            shingle_width=payload["shingle_width"],
        )
        for member_id, shingles in payload["entries"].items():
            index._insert_shingles(member_id, frozenset(shingles))
        return index

    def _insert_shingles(self, member_id: str, shingles: frozenset[str]) -> None:
        signature = self.hasher.signature(shingles)
        self._shingles[member_id] = shingles
        for band in range(self.bands):
            rows = signature[band * self.rows : (band + 1) * self.rows]
            key = _band_key(band, rows)
            self._buckets[band].setdefault(key, set()).add(member_id)


def is_instance_dup(input_code: str, index: LshIndex) -> tuple[bool, str | None]:
    """Check a code text against indexed instances.

    True iff some LSH candidate is confirmed by exact Jaccard strictly above
    the index threshold; the caller inserts the code on a False result.
    """
    match = index.query(input_code)
    if match is None:
        return False, None
    return True, match[0]
