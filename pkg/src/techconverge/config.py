"""Pipeline configuration: one YAML file drives every stage."""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml


class ConfigError(Exception):
    pass


@dataclass
class PipelineConfig:
    # corpora (JSONL paths)
    main_corpus: str = ""
    control_corpus: str = ""
    book_corpus: str = ""
    # sub-corpus selection
    query_terms: list[str] = field(default_factory=list)
    query_fields: list[str] = field(default_factory=lambda: ["title", "abstract"])
    # extraction
    endpoint_url: str = ""
    model: str = ""
    temperature: float = 0.0
    max_in_flight: int = 4
    use_fallback: bool = True
    api_key_env: str = "CHAT_API_KEY"
    # statistical filters
    min_count: int = 5
    per_page_min: float = 3.0
    top_fraction: float = 0.10
    keep_fraction: float = 0.5
    # stapling / clustering
    staple_threshold: float = 0.85
    cluster_naming: str = "token"
    keyterms_per_abstract: int = 10
    # graph analytics
    resolution: float = 0.85
    trend_split: list[int] = field(default_factory=lambda: [2022, 1])
    trend_share: float = 0.7
    seed: int = 0
    # temporal analyses
    analysis_from: list[int] = field(default_factory=lambda: [2022, 3])
    analysis_to: list[int] = field(default_factory=lambda: [2023, 10])
    convergence_k: int = 10
    risers_k: int = 5

    def validate(self) -> None:
        checks = [
            (0.0 < self.top_fraction <= 1.0, "top_fraction must be in (0, 1]"),
            (0.0 < self.keep_fraction <= 1.0, "keep_fraction must be in (0, 1]"),
            (0.0 < self.staple_threshold <= 1.0, "staple_threshold must be in (0, 1]"),
            (0.0 <= self.trend_share <= 1.0, "trend_share must be in [0, 1]"),
            (self.min_count >= 0, "min_count must be >= 0"),
            (self.per_page_min > 0, "per_page_min must be positive"),
            (self.resolution > 0, "resolution must be positive"),
            (self.keyterms_per_abstract >= 0, "keyterms_per_abstract must be >= 0"),
            (self.cluster_naming in ("token", "char"), "cluster_naming must be token or char"),
            (len(self.trend_split) == 2, "trend_split must be [year, month]"),
            (len(self.analysis_from) == 2, "analysis_from must be [year, month]"),
            (len(self.analysis_to) == 2, "analysis_to must be [year, month]"),
            (bool(self.main_corpus), "main_corpus path is required"),
        ]
        for ok, message in checks:
            if not ok:
                raise ConfigError(message)

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "PipelineConfig":
        known = {f for f in cls.__dataclass_fields__}
        unknown = set(data) - known
        if unknown:
            raise ConfigError(f"unknown config keys: {sorted(unknown)}")
        config = cls(**data)
        config.validate()
        return config

    @classmethod
    def from_file(cls, path: str | Path) -> "PipelineConfig":
        try:
            raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot load config {path}: {exc}") from exc
        if not isinstance(raw, dict):
            raise ConfigError("config file must contain a mapping")
        return cls.from_dict(raw)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(
            yaml.safe_dump(self.to_dict(), sort_keys=True), encoding="utf-8"
        )
