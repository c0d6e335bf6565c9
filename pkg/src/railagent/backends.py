"""Completion backends: a deterministic scripted double and a live client.

Both speak the same one-method interface (``complete``), so the agent
loop, the service, and the evaluation harness never know which one they
are talking to.  The live client uses the OpenAI-compatible
``/chat/completions`` wire shape, which fronts all the hosted models
this platform targets.
"""

from __future__ import annotations

import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Protocol, Sequence

import httpx
import yaml

logger = logging.getLogger(__name__)


class TransportError(RuntimeError):
    """Live request failed after exhausting the configured retries."""


class NoScriptMatchError(LookupError):
    """No scripted entry matched a prompt: a fixture authoring error."""


class AmbiguousScriptError(ValueError):
    """More than one live entry matched a prompt and the order is not a
    consume-once sequence, so the fixture is ambiguous."""


@dataclass(frozen=True)
class LlmConfig:
    """Decoding and transport settings for the live backend.

    Temperature defaults to 0 so evaluation runs are as deterministic as
    the provider allows.
    """

    model_id: str = "gpt-4o"
    endpoint_url: str = "https://api.openai.com/v1"
    api_key_env: str = "OPENAI_API_KEY"
    temperature: float = 0.0
    max_tokens: int = 512
    timeout: float = 30.0
    retries: int = 2

    def __post_init__(self) -> None:
        if self.timeout <= 0:
            raise ValueError("timeout must be positive")
        if not 0 <= self.retries <= 5:
            raise ValueError("retries must be between 0 and 5")
        if self.temperature < 0:
            raise ValueError("temperature must be non-negative")
        if self.max_tokens <= 0:
            raise ValueError("max_tokens must be positive")


class CompletionBackend(Protocol):
    def complete(self, prompt: str, stop_markers: Sequence[str] = ()) -> str: ...


def truncate_at_stop(text: str, stop_markers: Sequence[str]) -> str:
    """Cut ``text`` at the earliest stop marker; the marker is dropped."""
    cut = len(text)
    for marker in stop_markers:
        pos = text.find(marker)
        if pos != -1:
            cut = min(cut, pos)
    return text[:cut]


@dataclass
class ScriptEntry:
    """One canned completion, selected by substring or regex match."""

    completion: str
    substring: str | None = None
    pattern: str | None = None
    consume_once: bool = False
    _regex: re.Pattern[str] | None = field(default=None, repr=False, compare=False)

    def __post_init__(self) -> None:
        if (self.substring is None) == (self.pattern is None):
            raise ValueError("exactly one of substring/pattern must be set")
        if self.pattern is not None:
            self._regex = re.compile(self.pattern)

    def matches(self, prompt: str) -> bool:
        if self.substring is not None:
            return self.substring in prompt
        assert self._regex is not None
        return self._regex.search(prompt) is not None

    def matcher_key(self) -> tuple[str, str]:
        if self.substring is not None:
            return ("substring", self.substring)
        return ("pattern", self.pattern or "")


class ScriptedBackend:
    """Deterministic test double driven by an ordered entry list.

    Entries are evaluated in file order.  At most one live entry may
    match a prompt, with one sanctioned exception: when every matching
    entry is ``consume_once`` the first wins, which is how fixtures
    script multi-step sequences whose matchers overlap over time.
    Matching is serialized so consume-once bookkeeping stays exact under
    concurrent sessions.
    """

    def __init__(self, entries: Sequence[ScriptEntry]):
        validate_script(entries)
        self._entries: list[ScriptEntry] = list(entries)
        self._lock = threading.Lock()

    def complete(self, prompt: str, stop_markers: Sequence[str] = ()) -> str:
        with self._lock:
            matches = [e for e in self._entries if e.matches(prompt)]
            if not matches:
                tail = prompt[-200:].replace("\n", "\\n")
                raise NoScriptMatchError(
                    f"no script entry matches prompt ending with: ...{tail!r}"
                )
            if len(matches) > 1 and not all(e.consume_once for e in matches):
                keys = [e.matcher_key() for e in matches]
                raise AmbiguousScriptError(f"multiple entries match one prompt: {keys}")
            entry = matches[0]
            if entry.consume_once:
                self._entries.remove(entry)
        return truncate_at_stop(entry.completion, stop_markers)

    @property
    def remaining_entries(self) -> int:
        with self._lock:
            return len(self._entries)


def validate_script(entries: Sequence[ScriptEntry]) -> None:
    """Reject scripts that are ambiguous by construction: two persistent
    entries with identical matchers can never both be reachable."""
    seen: set[tuple[str, str]] = set()
    for entry in entries:
        if entry.consume_once:
            continue
        key = entry.matcher_key()
        if key in seen:
            raise AmbiguousScriptError(f"duplicate persistent matcher: {key}")
        seen.add(key)


def load_script(path: str | Path) -> list[ScriptEntry]:
    """Load a script fixture file (a YAML list of entry records)."""
    raw = yaml.safe_load(Path(path).read_text(encoding="utf-8"))
    if not isinstance(raw, list):
        raise ValueError(f"script file must hold a list of entries: {path}")
    return [script_entry_from_record(record, index=i) for i, record in enumerate(raw)]


def script_entry_from_record(record: dict, index: int = 0) -> ScriptEntry:
    if not isinstance(record, dict) or "completion" not in record:
        raise ValueError(f"script entry {index}: expected a mapping with 'completion'")
    return ScriptEntry(
        completion=str(record["completion"]),
        substring=record.get("match"),
        pattern=record.get("pattern"),
        consume_once=bool(record.get("consume_once", False)),
    )


class OpenAIChatBackend:
    """Live client for OpenAI-compatible ``/chat/completions`` gateways.

    The whole prompt travels as a single user message so the flat
    iteration-prompt concatenation reaches the model verbatim, without
    system/assistant re-segmentation.
    """

    def __init__(self, config: LlmConfig, client: httpx.Client | None = None):
        self.config = config
        self._client = client or httpx.Client(timeout=config.timeout)

    def complete(self, prompt: str, stop_markers: Sequence[str] = ()) -> str:
        if not prompt:
            raise ValueError("prompt must be non-empty")
        url = self.config.endpoint_url.rstrip("/") + "/chat/completions"
        api_key = os.environ.get(self.config.api_key_env, "")
        headers = {"Authorization": f"Bearer {api_key}"}
        body = {
            "model": self.config.model_id,
            "messages": [{"role": "user", "content": prompt}],
            "temperature": self.config.temperature,
            "max_tokens": self.config.max_tokens,
        }
        if stop_markers:
            body["stop"] = list(stop_markers)

        last_error: Exception | None = None
        for attempt in range(self.config.retries + 1):
            try:
                response = self._client.post(url, json=body, headers=headers)
                response.raise_for_status()
                text = response.json()["choices"][0]["message"]["content"] or ""
                # Providers usually honor `stop`, but enforce it locally too.
                return truncate_at_stop(text, stop_markers)
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                logger.warning(
                    "completion attempt %d/%d failed: %r",
                    attempt + 1,
                    self.config.retries + 1,
                    exc,
                )
                if attempt < self.config.retries:
                    time.sleep(min(2.0**attempt * 0.25, 4.0))
        raise TransportError(
            f"completion failed after {self.config.retries + 1} attempts: {last_error!r}"
        )
