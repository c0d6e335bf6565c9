"""Application configuration: YAML sections mapped onto typed settings.

Unset paths fall back to the packaged sample fixtures, so a bare install
can run end-to-end out of the box.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields
from importlib import resources
from pathlib import Path

import yaml

from .backends import LlmConfig


def data_path(name: str) -> Path:
    return Path(str(resources.files("railagent").joinpath("data").joinpath(name)))


@dataclass
class QtaoSettings:
    max_iterations: int = 5
    error_info_enabled: bool = True
    repair_reprompts: int = 1


@dataclass
class WeatherSettings:
    provider: str = "fixture"  # "fixture" | "amap"
    horizon_days: int | None = None  # None: use the fixture file's own value
    fixture_path: str | None = None
    amap_key_env: str = "AMAP_API_KEY"


@dataclass
class RecommendSettings:
    k: int = 3


@dataclass
class DataSettings:
    corpus_path: str | None = None
    timetable_path: str | None = None

    def resolved_corpus(self) -> Path:
        return Path(self.corpus_path) if self.corpus_path else data_path("corpus_sample.jsonl")

    def resolved_timetable(self) -> Path:
        return (
            Path(self.timetable_path)
            if self.timetable_path
            else data_path("timetable_sample.jsonl")
        )


@dataclass
class AppConfig:
    qtao: QtaoSettings = field(default_factory=QtaoSettings)
    llm: LlmConfig = field(default_factory=LlmConfig)
    weather: WeatherSettings = field(default_factory=WeatherSettings)
    recommend: RecommendSettings = field(default_factory=RecommendSettings)
    data: DataSettings = field(default_factory=DataSettings)


def _build_section(cls, raw: dict | None):
    raw = dict(raw or {})
    known = {f.name for f in fields(cls)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown {cls.__name__} keys: {sorted(unknown)}")
    return cls(**raw)


def load_app_config(path: str | Path | None = None) -> AppConfig:
    """Load configuration from a YAML file; missing sections take defaults."""
    if path is None:
        return AppConfig()
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8")) or {}
    if not isinstance(raw, dict):
        raise ValueError(f"config file must hold a mapping: {path}")
    return AppConfig(
        qtao=_build_section(QtaoSettings, raw.get("qtao")),
        llm=_build_section(LlmConfig, raw.get("llm")),
        weather=_build_section(WeatherSettings, raw.get("weather")),
        recommend=_build_section(RecommendSettings, raw.get("recommend")),
        data=_build_section(DataSettings, raw.get("data")),
    )
