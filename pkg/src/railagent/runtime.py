"""Composition root: wires stores, backend, tools, and engine together.

The immutable stores (catalog, timetable, weather fixture) load once and
are shared across sessions; engines are cheap per-session views that bake
in any session-level setting overrides.
"""

from __future__ import annotations

import os
from dataclasses import dataclass
from datetime import datetime
from pathlib import Path
from typing import Mapping

from .backends import (
    CompletionBackend,
    LlmConfig,
    OpenAIChatBackend,
    ScriptedBackend,
    load_script,
)
from .catalog import Corpus, load_corpus
from .config import AppConfig, data_path
from .dates import Clock
from .engine import AgentEngine, EngineConfig, QtaoTrace
from .sessions import SessionState
from .ticketing import Timetable, load_timetable
from .tools import build_tool_registry
from .weather import AmapProvider, FixtureProvider, WeatherProvider


def system_clock() -> datetime:
    return datetime.now()


@dataclass
class AgentRuntime:
    config: AppConfig
    backend: CompletionBackend
    clock: Clock
    corpus: Corpus
    timetable: Timetable
    weather_provider: WeatherProvider

    @classmethod
    def build(
        cls,
        config: AppConfig | None = None,
        backend: CompletionBackend | None = None,
        clock: Clock | None = None,
        script_path: str | Path | None = None,
    ) -> "AgentRuntime":
        """Load stores and pick a backend.

        ``script_path`` forces the scripted backend; otherwise the live
        client is built from the LLM settings.
        """
        config = config or AppConfig()
        clock = clock or system_clock
        if backend is None:
            if script_path is not None:
                backend = ScriptedBackend(load_script(script_path))
            else:
                backend = OpenAIChatBackend(config.llm)
        corpus = load_corpus(config.data.resolved_corpus())
        timetable = load_timetable(config.data.resolved_timetable())
        weather_provider = cls._build_weather_provider(config, clock)
        return cls(
            config=config,
            backend=backend,
            clock=clock,
            corpus=corpus,
            timetable=timetable,
            weather_provider=weather_provider,
        )

    @staticmethod
    def _build_weather_provider(config: AppConfig, clock: Clock) -> WeatherProvider:
        settings = config.weather
        if settings.provider == "amap":
            api_key = os.environ.get(settings.amap_key_env, "")
            return AmapProvider(api_key=api_key)
        path = settings.fixture_path or data_path("weather_sample.yaml")
        provider = FixtureProvider.from_file(path, clock)
        if settings.horizon_days is not None:
            provider.horizon_days = settings.horizon_days
        return provider

    def effective_settings(self, overrides: Mapping | None = None) -> dict:
        settings = {
            "max_iterations": self.config.qtao.max_iterations,
            "error_info_enabled": self.config.qtao.error_info_enabled,
            "repair_reprompts": self.config.qtao.repair_reprompts,
            "recommendation_k": self.config.recommend.k,
        }
        for key, value in (overrides or {}).items():
            if key in settings and value is not None:
                settings[key] = value
        return settings

    def engine_for(self, overrides: Mapping | None = None) -> AgentEngine:
        settings = self.effective_settings(overrides)
        registry = build_tool_registry(
            timetable=self.timetable,
            corpus=self.corpus,
            weather_provider=self.weather_provider,
            backend=self.backend,
            clock=self.clock,
            error_info=bool(settings["error_info_enabled"]),
            recommendation_k=int(settings["recommendation_k"]),
        )
        engine_config = EngineConfig(
            max_iterations=int(settings["max_iterations"]),
            repair_reprompts=int(settings["repair_reprompts"]),
        )
        return AgentEngine(self.backend, registry, config=engine_config)

    def run_message(self, session: SessionState, text: str) -> QtaoTrace:
        engine = self.engine_for(session.config_overrides)
        return engine.run_round(session, text)
