"""Pipeline configuration: one YAML file, flag-overridable field by field."""

from __future__ import annotations

from dataclasses import MISSING, dataclass, field, fields, is_dataclass
from pathlib import Path

import yaml

from .prompts import INTENT_CATEGORIES


@dataclass
class Thresholds:
    rouge_dup: float = 0.7
    jaccard_dup: float = 0.75
    min_stars: int = 100
    max_edited_rows: int = 100
    max_tokens: int = 1024


@dataclass
class Sampling:
    seeds_per_prompt: int = 7
    generated_per_prompt: int = 1
    scenarios_per_instruction: int = 10


@dataclass
class Llm:
    backend: str = "mock"  # mock | http
    endpoint: str = ""
    model: str = "gpt-3.5-turbo"
    api_key: str = ""  # falls back to EDITFORGE_LLM_API_KEY
    temperature: float = 1.0
    judge_temperature: float = 0.0
    max_retries: int = 3
    max_concurrency: int = 4


@dataclass
class Dedup:
    num_perm: int = 128
    minhash_seed: int = 1


@dataclass
class Paths:
    seed_pool: str = "data/seeds.jsonl"
    holdout: str = ""  # optional JSON list of held-out seed ids
    corpus: str = "data/corpus.jsonl"
    splits: str = "data/splits.json"
    stats: str = "data/stats.json"
    report: str = "data/run_report.json"
    prompts_dir: str = ""  # empty: shipped defaults
    state_dir: str = "state"


@dataclass
class Review:
    host: str = "127.0.0.1"
    port: int = 8321
    static_dir: str = ""


@dataclass
class PipelineConfig:
    thresholds: Thresholds = field(default_factory=Thresholds)
    sampling: Sampling = field(default_factory=Sampling)
    llm: Llm = field(default_factory=Llm)
    dedup: Dedup = field(default_factory=Dedup)
    paths: Paths = field(default_factory=Paths)
    review: Review = field(default_factory=Review)
    rng_seed: int = 0
    round_budget: int = 200
    intent_labels: list[str] = field(default_factory=lambda: list(INTENT_CATEGORIES))

    def validate(self) -> None:
        t = self.thresholds
        if not 0.0 <= t.rouge_dup <= 1.0:
            raise ConfigError(f"thresholds.rouge_dup out of range: {t.rouge_dup}")
        if not 0.0 <= t.jaccard_dup <= 1.0:
            raise ConfigError(f"thresholds.jaccard_dup out of range: {t.jaccard_dup}")
        if t.min_stars < 0 or t.max_edited_rows < 1 or t.max_tokens < 1:
            raise ConfigError("thresholds must be positive")
        s = self.sampling
        if s.seeds_per_prompt + s.generated_per_prompt < 2:
            raise ConfigError("seeds_per_prompt + generated_per_prompt must be at least 2")
        if s.scenarios_per_instruction < 1:
            raise ConfigError("scenarios_per_instruction must be at least 1")
        if self.llm.backend not in ("mock", "http"):
            raise ConfigError(f"llm.backend must be mock or http, got {self.llm.backend!r}")
        if self.dedup.num_perm < 16:
            raise ConfigError("dedup.num_perm must be at least 16")
        if self.round_budget < 1:
            raise ConfigError("round_budget must be at least 1")
        if not self.intent_labels:
            raise ConfigError("intent_labels must be nonempty")


class ConfigError(Exception):
    pass


def _build(cls, data: dict, prefix: str = ""):
    known = {f.name: f for f in fields(cls)}
    unknown = set(data) - set(known)
    if unknown:
        raise ConfigError(f"unknown config key(s): {sorted(prefix + k for k in unknown)}")
    kwargs = {}
    for name, f in known.items():
        if name not in data:
            continue
        value = data[name]
        if is_dataclass(f.type) or (isinstance(f.type, str) and f.type in _SECTIONS):
            section_cls = _SECTIONS[f.type] if isinstance(f.type, str) else f.type
            if not isinstance(value, dict):
                raise ConfigError(f"{prefix}{name} must be a mapping")
            kwargs[name] = _build(section_cls, value, prefix=f"{prefix}{name}.")
        else:
            kwargs[name] = value
    return cls(**kwargs)


_SECTIONS = {
    "Thresholds": Thresholds,
    "Sampling": Sampling,
    "Llm": Llm,
    "Dedup": Dedup,
    "Paths": Paths,
    "Review": Review,
}


def load_config(path: str | Path | None = None, overrides: dict | None = None) -> PipelineConfig:
    """Load a YAML/JSON config file and apply dotted-key overrides."""
    data: dict = {}
    if path is not None:
        loaded = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError("config file must contain a mapping")
        data = loaded
    config = _build(PipelineConfig, data)
    for key, value in (overrides or {}).items():
        set_by_path(config, key, value)
    config.validate()
    return config


def set_by_path(config: PipelineConfig, dotted: str, raw: object) -> None:
    """Assign one field by dotted path, coercing strings to the field type."""
    parts = dotted.split(".")
    target = config
    for part in parts[:-1]:
        if not hasattr(target, part):
            raise ConfigError(f"unknown config section {dotted!r}")
        target = getattr(target, part)
    name = parts[-1]
    if not is_dataclass(target) or name not in {f.name for f in fields(target)}:
        raise ConfigError(f"unknown config field {dotted!r}")
    current = getattr(target, name)
    setattr(target, name, _coerce(raw, current, dotted))


def _coerce(raw: object, current: object, dotted: str):
    if not isinstance(raw, str):
        return raw
    if isinstance(current, bool):
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ConfigError(f"{dotted}: expected a boolean, got {raw!r}")
    if isinstance(current, int) and not isinstance(current, bool):
        return int(raw)
    if isinstance(current, float):
        return float(raw)
    if isinstance(current, list):
        return [part.strip() for part in raw.split(",") if part.strip()]
    return raw


def iter_field_paths(cls=PipelineConfig, prefix: str = ""):
    """Yield (dotted_path, default) for every leaf config field."""
    for f in fields(cls):
        ftype = _SECTIONS.get(f.type) if isinstance(f.type, str) else f.type
        if ftype is not None and is_dataclass(ftype):
            yield from iter_field_paths(ftype, prefix=f"{prefix}{f.name}.")
        else:
            if f.default is not MISSING:
                default = f.default
            elif f.default_factory is not MISSING:  # type: ignore[misc]
                default = f.default_factory()  # type: ignore[misc]
            else:
                default = None
            yield f"{prefix}{f.name}", default
