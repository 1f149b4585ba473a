"""Mine git repositories into candidate seed edits.

Walks a repository's history with plumbing git commands and yields one
record per (commit, changed source file) pair, then applies the automatic
filter rules: repository quality (stars, license), single-file single-hunk
commits, informative messages, and a bounded edit size. Star counts and
licenses come from a key=value sidecar file next to the repository, keeping
mining offline and deterministic.
"""

from __future__ import annotations

import difflib
import logging
import subprocess
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterator

from .diffstats import line_diff

logger = logging.getLogger(__name__)

SOURCE_EXTENSION = ".py"

PERMITTED_LICENSES = (
    "MIT",
    "Apache-2.0",
    "GPL-3.0",
    "GPL-2.0",
    "BSD-2.0",
    "BSD-3.0",
    "LGPL-2.1",
    "LGPL-3.0",
    "AGPL-3.0",
)

DROP_REASONS = (
    "merge_commit",
    "low_stars",
    "bad_license",
    "multi_file",
    "multi_hunk",
    "bad_message",
    "too_many_rows",
)

_EMPTY_TREE = "4b825dc642cb6eb9a060e54bf8d69288fbee4904"


class IngestionError(Exception):
    """The repository could not be read."""


@dataclass(frozen=True)
class CommitRecord:
    """One mined (commit, changed file) pair."""

    repo_id: str
    commit_sha: str
    message: str
    file_path: str
    content_before: str
    content_after: str
    stars: int
    license: str
    parent_count: int


@dataclass(frozen=True)
class FilterVerdict:
    kept: bool
    reason: str  # a DROP_REASONS entry, or "none" when kept

    def __post_init__(self):
        assert self.kept == (self.reason == "none")


@dataclass
class FilterConfig:
    min_stars: int = 100
    max_edited_rows: int = 100
    permitted_licenses: tuple[str, ...] = PERMITTED_LICENSES
    source_extension: str = SOURCE_EXTENSION


@dataclass
class RepoMetadata:
    stars: int = 0
    license: str = ""
    extra: dict[str, str] = field(default_factory=dict)


def load_sidecar(path: str | Path) -> RepoMetadata:
    """Parse a key=value metadata sidecar (stars, license; # comments)."""
    meta = RepoMetadata()
    for raw in Path(path).read_text(encoding="utf-8").splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or "=" not in line:
            continue
        key, value = (part.strip() for part in line.split("=", 1))
        if key == "stars":
            meta.stars = int(value)
        elif key == "license":
            meta.license = value
        else:
            meta.extra[key] = value
    return meta


def _git(repo: Path, *args: str) -> bytes:
    result = subprocess.run(
        ["git", "-C", str(repo), *args], capture_output=True, check=False
    )
    if result.returncode != 0:
        raise IngestionError(
            f"git {' '.join(args)} failed in {repo}: {result.stderr.decode(errors='replace').strip()}"
        )
    return result.stdout


def _file_at(repo: Path, treeish: str | None, path: str) -> str | None:
    """File text at a revision.

    Absent files (added/deleted in the commit, or no parent) read as "";
    binary or undecodable content reads as None so the record is skipped.
    """
    if treeish is None:
        return ""
    exists = subprocess.run(
        ["git", "-C", str(repo), "cat-file", "-e", f"{treeish}:{path}"],
        capture_output=True,
        check=False,
    )
    if exists.returncode != 0:
        return ""
    result = subprocess.run(
        ["git", "-C", str(repo), "show", f"{treeish}:{path}"],
        capture_output=True,
        check=False,
    )
    if result.returncode != 0:
        return None
    data = result.stdout
    if b"\x00" in data:
        return None
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        return None


def changed_files(repo: Path, commit: str, parent: str | None) -> list[str]:
    """Paths changed by a commit relative to its (first) parent."""
    base = parent if parent else _EMPTY_TREE
    out = _git(repo, "diff-tree", "-r", "--name-only", "--no-commit-id", base, commit)
    return [line for line in out.decode("utf-8", errors="replace").splitlines() if line]


def ingest_repo(
    repo_source: str | Path,
    sidecar: str | Path | None = None,
    source_extension: str = SOURCE_EXTENSION,
) -> Iterator[CommitRecord]:
    """Yield one CommitRecord per (commit, changed source file) pair.

    Commits are visited oldest first. Merge commits are yielded with their
    parent_count set so the filter can drop them. Binary or undecodable file
    content skips the record with a warning; unchanged content (for example
    a pure mode change) is never emitted.
    """
    for record, _ in ingest_with_counts(repo_source, sidecar, source_extension):
        yield record


def ingest_with_counts(
    repo_source: str | Path,
    sidecar: str | Path | None = None,
    source_extension: str = SOURCE_EXTENSION,
) -> Iterator[tuple[CommitRecord, int]]:
    """Like ingest_repo, but pairs each record with the total number of files
    (any extension) its commit changed, which the multi_file rule needs."""
    repo = Path(repo_source)
    if not repo.exists():
        raise IngestionError(f"repository path does not exist: {repo}")
    try:
        _git(repo, "rev-parse", "--git-dir")
    except IngestionError as exc:
        raise IngestionError(f"not a readable git repository: {repo}") from exc

    if sidecar is None:
        candidate = repo / "repo-metadata.txt"
        sidecar = candidate if candidate.is_file() else None
    meta = load_sidecar(sidecar) if sidecar else RepoMetadata()
    repo_id = repo.name

    out = _git(repo, "rev-list", "--reverse", "--topo-order", "--parents", "HEAD")
    for line in out.decode("utf-8").splitlines():
        parts = line.split()
        sha, parents = parts[0], parts[1:]
        first_parent = parents[0] if parents else None
        message = _git(repo, "log", "-n", "1", "--format=%B", sha).decode(
            "utf-8", errors="replace"
        ).strip()

        commit_files = changed_files(repo, sha, first_parent)
        for path in commit_files:
            if not path.endswith(source_extension):
                continue
            before = _file_at(repo, first_parent, path)
            after = _file_at(repo, sha, path)
            if before is None or after is None:
                logger.warning(
                    "skipping %s:%s in %s: binary or undecodable content",
                    sha[:10],
                    path,
                    repo_id,
                )
                continue
            if before == after:
                continue
            record = CommitRecord(
                repo_id=repo_id,
                commit_sha=sha,
                message=message,
                file_path=path,
                content_before=before,
                content_after=after,
                stars=meta.stars,
                license=meta.license,
                parent_count=len(parents),
            )
            yield record, len(commit_files)


def count_hunks(content_before: str, content_after: str) -> int:
    """Number of contiguous changed blocks under a line-based diff."""
    matcher = difflib.SequenceMatcher(
        a=content_before.splitlines(), b=content_after.splitlines(), autojunk=False
    )
    return sum(1 for tag, *_ in matcher.get_opcodes() if tag != "equal")


def apply_auto_filters(
    record: CommitRecord,
    n_changed_files_in_commit: int,
    cfg: FilterConfig | None = None,
) -> FilterVerdict:
    """Evaluate the automatic drop rules in fixed order.

    Order: merge_commit, low_stars, bad_license, multi_file, multi_hunk,
    bad_message, too_many_rows. The first matching rule decides the verdict.
    """
    cfg = cfg or FilterConfig()
    if record.parent_count > 1:
        return FilterVerdict(False, "merge_commit")
    if record.stars < cfg.min_stars:
        return FilterVerdict(False, "low_stars")
    if record.license not in cfg.permitted_licenses:
        return FilterVerdict(False, "bad_license")
    if n_changed_files_in_commit != 1:
        return FilterVerdict(False, "multi_file")
    if count_hunks(record.content_before, record.content_after) != 1:
        return FilterVerdict(False, "multi_hunk")
    if len(record.message.split()) <= 1:
        return FilterVerdict(False, "bad_message")
    if line_diff(record.content_before, record.content_after).n_diff > cfg.max_edited_rows:
        return FilterVerdict(False, "too_many_rows")
    return FilterVerdict(True, "none")
