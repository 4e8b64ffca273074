"""Uniform language-model backend interface.

Two kinds: an HTTP client for any chat-completions-compatible endpoint, and
a deterministic scripted backend that replays rule files for offline tests
and evaluation. Every call carries a role tag so one rule file can serve
all agents. No other module performs network calls to model endpoints.
"""

from __future__ import annotations

import json
import re
import threading
import time
from dataclasses import dataclass, field
from pathlib import Path

import httpx

from millwright.errors import BackendFailure, ConfigurationError, NoRuleMatch

ROLE_TAGS = ("router", "analysis-planner", "kg-synthesizer", "extractor")


@dataclass
class BackendProfile:
    kind: str  # "http-endpoint" | "scripted" | "disabled"
    endpoint: str = ""
    script_path: str = ""
    model: str = ""
    timeout: float = 30.0
    retries: int = 2
    temperature: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("http-endpoint", "scripted", "disabled"):
            raise ConfigurationError(f"unknown backend kind {self.kind!r}")
        if self.kind == "scripted" and self.script_path and not Path(self.script_path).exists():
            raise ConfigurationError(f"scripted rule file missing: {self.script_path}")


@dataclass
class ScriptedRule:
    """Ordered first-match-wins rule: optional role gate plus prompt pattern."""

    response: str
    role: str | None = None
    contains: str | None = None
    regex: str | None = None
    consume_once: bool = False
    consumed: bool = False

    def matches(self, role_tag: str, prompt: str) -> bool:
        if self.consumed:
            return False
        if self.role is not None and self.role != role_tag:
            return False
        if self.contains is not None and self.contains not in prompt:
            return False
        if self.regex is not None and re.search(self.regex, prompt) is None:
            return False
        return True


class Backend:
    def complete(self, role_tag: str, prompt: str) -> str:
        raise NotImplementedError


class DisabledBackend(Backend):
    def complete(self, role_tag: str, prompt: str) -> str:
        raise BackendFailure("backend disabled")


class ScriptedBackend(Backend):
    """Replays canned responses; referentially transparent given its rules
    (modulo consume-once rules, which decrement observably)."""

    def __init__(self, rules: list[ScriptedRule]):
        self.rules = rules
        self._lock = threading.Lock()

    def complete(self, role_tag: str, prompt: str) -> str:
        if role_tag not in ROLE_TAGS:
            raise ConfigurationError(f"unknown role tag {role_tag!r}")
        with self._lock:
            for rule in self.rules:
                if rule.matches(role_tag, prompt):
                    if rule.consume_once:
                        rule.consumed = True
                    return rule.response
        raise NoRuleMatch(
            f"no scripted rule for role={role_tag} prompt={prompt[:120]!r}")

    @classmethod
    def from_file(cls, path: str | Path) -> "ScriptedBackend":
        raw = json.loads(Path(path).read_text())
        rules = [ScriptedRule(
            response=entry["response"],
            role=entry.get("role"),
            contains=entry.get("contains"),
            regex=entry.get("regex"),
            consume_once=bool(entry.get("consume_once", False)),
        ) for entry in raw]
        return cls(rules)


def write_rule_file(path: str | Path, rules: list[ScriptedRule]) -> None:
    payload = [{
        "role": r.role, "contains": r.contains, "regex": r.regex,
        "response": r.response, "consume_once": r.consume_once,
    } for r in rules]
    Path(path).write_text(json.dumps(payload, indent=2))


class HttpBackend(Backend):
    """Chat-completions wire shape with bounded retries and backoff."""

    def __init__(self, profile: BackendProfile, transport: httpx.BaseTransport | None = None,
                 backoff_base: float = 0.25):
        self.profile = profile
        self.backoff_base = backoff_base
        self._client = httpx.Client(base_url=profile.endpoint, timeout=profile.timeout,
                                    transport=transport)

    def complete(self, role_tag: str, prompt: str) -> str:
        body = {
            "model": self.profile.model,
            "temperature": self.profile.temperature,
            "messages": [
                {"role": "system", "content": f"[{role_tag}]"},
                {"role": "user", "content": prompt},
            ],
        }
        last_error: Exception | None = None
        for attempt in range(self.profile.retries + 1):
            try:
                response = self._client.post("/chat/completions", json=body)
                response.raise_for_status()
                data = response.json()
                return data["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last_error = exc
                if attempt < self.profile.retries:
                    time.sleep(self.backoff_base * (2 ** attempt))
        raise BackendFailure(f"backend unreachable after "
                             f"{self.profile.retries + 1} attempts: {last_error}")


def make_backend(profile: BackendProfile, **kwargs) -> Backend:
    if profile.kind == "scripted":
        return ScriptedBackend.from_file(profile.script_path)
    if profile.kind == "http-endpoint":
        return HttpBackend(profile, **kwargs)
    return DisabledBackend()


def complete(profile: BackendProfile, role_tag: str, prompt: str) -> str:
    return make_backend(profile).complete(role_tag, prompt)
