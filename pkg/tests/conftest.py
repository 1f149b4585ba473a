"""Shared fixtures: deterministic git repositories and seed pools."""

import json
import subprocess
from pathlib import Path

import pytest

GIT_ENV = {
    "GIT_AUTHOR_NAME": "Fixture Author",
    "GIT_AUTHOR_EMAIL": "fixture@example.com",
    "GIT_COMMITTER_NAME": "Fixture Author",
    "GIT_COMMITTER_EMAIL": "fixture@example.com",
    "GIT_AUTHOR_DATE": "2023-05-01T12:00:00+00:00",
    "GIT_COMMITTER_DATE": "2023-05-01T12:00:00+00:00",
    "HOME": "/tmp",
}


class RepoBuilder:
    """Build a throwaway git repository commit by commit."""

    def __init__(self, root: Path):
        self.root = root
        root.mkdir(parents=True, exist_ok=True)
        self._git("init", "-q", "-b", "main")

    def _git(self, *args: str) -> str:
        result = subprocess.run(
            ["git", "-C", str(self.root), *args],
            capture_output=True,
            text=True,
            env=GIT_ENV,
        )
        assert result.returncode == 0, result.stderr
        return result.stdout.strip()

    def commit(self, message: str, files: dict[str, str | bytes]) -> str:
        for rel, content in files.items():
            path = self.root / rel
            path.parent.mkdir(parents=True, exist_ok=True)
            if isinstance(content, bytes):
                path.write_bytes(content)
            else:
                path.write_text(content, encoding="utf-8")
        self._git("add", "-A")
        self._git("commit", "-q", "--allow-empty", "-m", message)
        return self._git("rev-parse", "HEAD")

    def branch(self, name: str) -> None:
        self._git("checkout", "-q", "-b", name)

    def checkout(self, name: str) -> None:
        self._git("checkout", "-q", name)

    def merge(self, other: str, message: str) -> str:
        self._git("merge", "-q", "--no-ff", "-m", message, other)
        return self._git("rev-parse", "HEAD")

    def sidecar(self, stars: int, license_id: str) -> Path:
        path = self.root / "repo-metadata.txt"
        path.write_text(f"stars={stars}\nlicense={license_id}\n", encoding="utf-8")
        return path


@pytest.fixture
def repo_builder(tmp_path):
    def build(name: str = "fixture-repo") -> RepoBuilder:
        return RepoBuilder(tmp_path / name)

    return build


def make_seed_objs(count: int = 10) -> list[dict]:
    """Hand-written seed tasks with mutually distant instructions and codes."""
    seeds = [
        (
            "Add a retry loop around the flaky network call in fetch_page",
            "def fetch_page(url):\n    resp = http_get(url)\n    return resp.text",
            "def fetch_page(url):\n    for _ in range(3):\n        try:\n            resp = http_get(url)\n            return resp.text\n        except NetworkError:\n            continue\n    raise FetchFailed(url)",
        ),
        (
            "Replace the manual index loop with enumerate in print_scores",
            "def print_scores(scores):\n    i = 0\n    for s in scores:\n        print(i, s)\n        i += 1",
            "def print_scores(scores):\n    for i, s in enumerate(scores):\n        print(i, s)",
        ),
        (
            "Rename the variable tmp to parsed_config for clarity",
            "tmp = load_yaml(path)\nvalidate(tmp)\napply_settings(tmp)",
            "parsed_config = load_yaml(path)\nvalidate(parsed_config)\napply_settings(parsed_config)",
        ),
        (
            "Use a context manager when writing the report file",
            "f = open('report.txt', 'w')\nf.write(render_report(rows))\nf.close()",
            "with open('report.txt', 'w') as f:\n    f.write(render_report(rows))",
        ),
        (
            "Guard against division by zero when computing the average",
            "def average(nums):\n    return sum(nums) / len(nums)",
            "def average(nums):\n    if not nums:\n        return 0.0\n    return sum(nums) / len(nums)",
        ),
        (
            "Convert the recursive factorial into an iterative version",
            "def factorial(n):\n    if n <= 1:\n        return 1\n    return n * factorial(n - 1)",
            "def factorial(n):\n    result = 1\n    for k in range(2, n + 1):\n        result *= k\n    return result",
        ),
        (
            "Cache the compiled regex outside the hot loop in tokenize",
            "def tokenize(lines):\n    out = []\n    for line in lines:\n        pattern = re.compile(r'\\w+')\n        out.extend(pattern.findall(line))\n    return out",
            "WORD = re.compile(r'\\w+')\n\ndef tokenize(lines):\n    out = []\n    for line in lines:\n        out.extend(WORD.findall(line))\n    return out",
        ),
        (
            "Sort the leaderboard entries by score descending before display",
            "def show(entries):\n    for e in entries:\n        print(e.name, e.score)",
            "def show(entries):\n    for e in sorted(entries, key=lambda e: e.score, reverse=True):\n        print(e.name, e.score)",
        ),
        (
            "Log a warning instead of silently swallowing the exception",
            "try:\n    sync_inventory()\nexcept Exception:\n    pass",
            "try:\n    sync_inventory()\nexcept Exception as exc:\n    logger.warning('inventory sync failed: %s', exc)",
        ),
        (
            "Extract the duplicated validation block into validate_user",
            "if not user.name:\n    raise ValueError('name')\nif not user.email:\n    raise ValueError('email')\nsave(user)\nif not admin.name:\n    raise ValueError('name')\nif not admin.email:\n    raise ValueError('email')\nsave(admin)",
            "def validate_user(u):\n    if not u.name:\n        raise ValueError('name')\n    if not u.email:\n        raise ValueError('email')\n\nvalidate_user(user)\nsave(user)\nvalidate_user(admin)\nsave(admin)",
        ),
    ]
    objs = []
    for instruction, input_code, output_code in seeds[:count]:
        objs.append(
            {
                "id": "",  # filled by the seed writer below
                "instruction": instruction,
                "scenario": None,
                "input": input_code,
                "output": output_code,
                "source": "github_seed",
                "n_diff": 0,
                "r_diff": 0.0,
                "bin": 1,
                "intent": None,
                "exchange_ids": [],
            }
        )
    return objs


def write_seed_file(path: Path, count: int = 10) -> Path:
    """Write a seed JSONL file in the corpus schema (ids/diffs normalized)."""
    from editforge.diffstats import line_diff
    from editforge.store import instance_id

    with path.open("w", encoding="utf-8") as handle:
        for obj in make_seed_objs(count):
            diff = line_diff(obj["input"], obj["output"])
            obj["id"] = instance_id(obj["instruction"], obj["input"], obj["output"])
            obj["n_diff"], obj["r_diff"], obj["bin"] = diff.n_diff, diff.r_diff, diff.bin
            handle.write(json.dumps(obj, ensure_ascii=False) + "\n")
    return path


@pytest.fixture
def seed_file(tmp_path):
    return write_seed_file(tmp_path / "seeds.jsonl")
