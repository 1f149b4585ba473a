"""Repository ingestion and the automatic filter rules."""

import pytest

from editforge.miner import (
    CommitRecord,
    FilterConfig,
    IngestionError,
    apply_auto_filters,
    count_hunks,
    ingest_repo,
    load_sidecar,
)

GOOD_CODE_A = "def greet(name):\n    return 'hi ' + name\n"
GOOD_CODE_B = "def greet(name):\n    return 'hello ' + name\n"


def make_record(**overrides) -> CommitRecord:
    base = dict(
        repo_id="repo",
        commit_sha="a" * 40,
        message="Improve greeting wording",
        file_path="pkg/mod.py",
        content_before=GOOD_CODE_A,
        content_after=GOOD_CODE_B,
        stars=150,
        license="MIT",
        parent_count=1,
    )
    base.update(overrides)
    return CommitRecord(**base)


# ---------------------------------------------------------------------------
# Ingestion
# ---------------------------------------------------------------------------

def test_three_linear_commits_yield_three_records(repo_builder):
    repo = repo_builder()
    repo.commit("first edit pass", {"app.py": "print(1)\n"})
    repo.commit("second edit pass", {"app.py": "print(2)\n"})
    repo.commit("third edit pass", {"app.py": "print(3)\n"})
    records = list(ingest_repo(repo.root))
    assert len(records) == 3
    assert [r.message for r in records] == [
        "first edit pass",
        "second edit pass",
        "third edit pass",
    ]
    assert records[1].content_before == "print(1)\n"
    assert records[1].content_after == "print(2)\n"


def test_non_source_extension_excluded(repo_builder):
    repo = repo_builder()
    repo.commit("write docs", {"README.md": "# hello\n"})
    assert list(ingest_repo(repo.root)) == []


def test_merge_commit_has_parent_count_two(repo_builder):
    repo = repo_builder()
    repo.commit("base version", {"app.py": "x = 1\n"})
    repo.branch("feature")
    repo.commit("feature work", {"app.py": "x = 1\nfeature = True\n"})
    repo.checkout("main")
    repo.commit("main work", {"other.txt": "note\n"})
    repo.merge("feature", "merge feature branch")
    records = list(ingest_repo(repo.root))
    merge_records = [r for r in records if r.parent_count == 2]
    assert len(merge_records) == 1
    assert merge_records[0].file_path == "app.py"


def test_binary_content_skipped(repo_builder, caplog):
    repo = repo_builder()
    repo.commit("seed", {"data.py": "x = 1\n"})
    repo.commit("binary blob", {"data.py": b"\x00\x01\x02binary"})
    with caplog.at_level("WARNING"):
        records = list(ingest_repo(repo.root))
    assert len(records) == 1  # only the initial add survives
    assert any("binary or undecodable" in msg for msg in caplog.messages)


def test_unreadable_repo_raises(tmp_path):
    with pytest.raises(IngestionError):
        list(ingest_repo(tmp_path / "missing"))
    plain = tmp_path / "plain"
    plain.mkdir()
    with pytest.raises(IngestionError):
        list(ingest_repo(plain))


def test_sidecar_metadata_flows_into_records(repo_builder):
    repo = repo_builder()
    repo.sidecar(stars=321, license_id="Apache-2.0")
    repo.commit("initial module\n\nwith body", {"m.py": "a = 1\n"})
    record = next(iter(ingest_repo(repo.root)))
    assert record.stars == 321
    assert record.license == "Apache-2.0"


def test_load_sidecar_parses_keys(tmp_path):
    path = tmp_path / "meta.txt"
    path.write_text("# comment\nstars = 250\nlicense = MIT\nowner=someone\n")
    meta = load_sidecar(path)
    assert meta.stars == 250
    assert meta.license == "MIT"
    assert meta.extra == {"owner": "someone"}


# ---------------------------------------------------------------------------
# Hunk counting
# ---------------------------------------------------------------------------

def test_single_hunk():
    before = "a\nb\nc\nd\n"
    after = "a\nB\nC\nd\n"
    assert count_hunks(before, after) == 1


def test_two_hunks():
    before = "a\nb\nc\nd\ne\n"
    after = "A\nb\nc\nd\nE\n"
    assert count_hunks(before, after) == 2


def test_pure_insertion_is_one_hunk():
    assert count_hunks("a\nb\n", "a\nx\ny\nb\n") == 1


# ---------------------------------------------------------------------------
# Filter rules
# ---------------------------------------------------------------------------

def test_filters_check_in_fixed_order():
    # A record violating everything reports the first rule in order.
    record = make_record(stars=1, license="Proprietary", parent_count=3, message="fix")
    verdict = apply_auto_filters(record, n_changed_files_in_commit=4)
    assert (verdict.kept, verdict.reason) == (False, "merge_commit")


def test_low_stars():
    verdict = apply_auto_filters(make_record(stars=99), 1)
    assert verdict.reason == "low_stars"
    assert apply_auto_filters(make_record(stars=100), 1).kept


def test_bad_license():
    verdict = apply_auto_filters(make_record(license="WTFPL"), 1)
    assert verdict.reason == "bad_license"


def test_multi_file():
    verdict = apply_auto_filters(make_record(), n_changed_files_in_commit=2)
    assert (verdict.kept, verdict.reason) == (False, "multi_file")


def test_multi_hunk():
    record = make_record(
        content_before="a\nb\nc\nd\ne\n", content_after="A\nb\nc\nd\nE\n"
    )
    assert apply_auto_filters(record, 1).reason == "multi_hunk"


def test_bad_message_single_word():
    assert apply_auto_filters(make_record(message="fix"), 1).reason == "bad_message"
    assert apply_auto_filters(make_record(message="  "), 1).reason == "bad_message"


def test_too_many_rows():
    before = "\n".join(f"line {i}" for i in range(200))
    after = "\n".join(f"line {i} changed" if i < 150 else f"line {i}" for i in range(200))
    record = make_record(content_before=before, content_after=after)
    assert apply_auto_filters(record, 1).reason == "too_many_rows"


def test_record_meeting_all_rules_is_kept():
    verdict = apply_auto_filters(make_record(), 1)
    assert (verdict.kept, verdict.reason) == (True, "none")


def test_verdict_invariant_kept_iff_reason_none():
    with pytest.raises(AssertionError):
        from editforge.miner import FilterVerdict

        FilterVerdict(kept=True, reason="low_stars")


def test_filter_determinism_and_partition():
    records = [
        make_record(),
        make_record(stars=5),
        make_record(message="fix"),
        make_record(parent_count=2),
        make_record(license="Unlicense"),
    ]
    counts: dict[str, int] = {}
    for record in records:
        first = apply_auto_filters(record, 1)
        second = apply_auto_filters(record, 1)
        assert first == second
        counts[first.reason] = counts.get(first.reason, 0) + 1
    assert sum(counts.values()) == len(records)


def test_custom_config_thresholds():
    cfg = FilterConfig(min_stars=10, max_edited_rows=1)
    assert apply_auto_filters(make_record(stars=10), 1, cfg).kept is False  # 2 rows > 1
    assert apply_auto_filters(make_record(stars=9), 1, cfg).reason == "low_stars"
