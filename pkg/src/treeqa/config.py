"""Run settings loaded from a JSON file, and gateway construction from them."""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field, fields, replace
from pathlib import Path
from typing import Any

from .evaluator import RefinementConfig
from .gateway import Gateway, HashingEmbedder, HttpChat, HttpEmbedder, Phase, RetryingChat, ScriptedChat, SimulatedClock
from .modes import BudgetConfig
from .navigation import TraversalConfig
from .symbolic.interpreter import SandboxLimits

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ProviderConfig:
    base_url: str = "https://api.openai.com/v1"
    model: str = "gpt-4o"
    selector_model: str = ""
    embedding_model: str = ""
    api_key_env: str = "TREEQA_API_KEY"
    retries: int = 3
    backoff: float = 1.0


@dataclass(frozen=True)
class Settings:
    refinement: RefinementConfig = field(default_factory=RefinementConfig)
    budget: BudgetConfig = field(default_factory=BudgetConfig)
    traversal: TraversalConfig = field(default_factory=TraversalConfig)
    sandbox: SandboxLimits = field(default_factory=SandboxLimits)
    provider: ProviderConfig = field(default_factory=ProviderConfig)
    max_corrections: int = 2
    temperatures: dict[str, float] = field(default_factory=dict)


_SECTIONS = {
    "refinement": RefinementConfig,
    "budget": BudgetConfig,
    "traversal": TraversalConfig,
    "sandbox": SandboxLimits,
    "provider": ProviderConfig,
}


def _section(cls: type, data: Any, name: str):
    if not isinstance(data, dict):
        raise ValueError(f"config section {name!r} must be an object")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(data) - known)
    if unknown:
        raise ValueError(f"unknown keys in config section {name!r}: {unknown}")
    return cls(**data)


def settings_from_dict(data: dict) -> Settings:
    unknown = sorted(set(data) - set(_SECTIONS) - {"max_corrections", "temperatures"})
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    s = Settings()
    updates: dict[str, Any] = {name: _section(cls, data[name], name) for name, cls in _SECTIONS.items() if name in data}
    if "max_corrections" in data:
        updates["max_corrections"] = int(data["max_corrections"])
    if "temperatures" in data:
        temps = data["temperatures"]
        valid = {p.value for p in Phase}
        if not isinstance(temps, dict) or not set(temps) <= valid:
            raise ValueError(f"temperatures must map phases {sorted(valid)} to numbers")
        updates["temperatures"] = {k: float(v) for k, v in temps.items()}
    return replace(s, **updates)


def load_settings(path: str | Path | None) -> Settings:
    if path is None:
        return Settings()
    return settings_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def build_gateway(settings: Settings, transcript: str | Path | None = None) -> tuple[Gateway, SimulatedClock | None]:
    """Scripted gateway (with a simulated clock) when a transcript is given, HTTP otherwise."""
    temps = {Phase(k): v for k, v in settings.temperatures.items()}
    if transcript is not None:
        clock = SimulatedClock()
        chat = ScriptedChat.from_file(transcript, clock=clock)
        return Gateway(chat, HashingEmbedder(), temperatures=temps), clock
    p = settings.provider
    chat = RetryingChat(HttpChat(p.base_url, p.model, api_key_env=p.api_key_env), retries=p.retries, backoff=p.backoff)
    selector = None
    if p.selector_model:
        selector = RetryingChat(HttpChat(p.base_url, p.selector_model, api_key_env=p.api_key_env), retries=p.retries, backoff=p.backoff)
    if p.embedding_model:
        embedder = HttpEmbedder(p.base_url, p.embedding_model, api_key_env=p.api_key_env)
    else:
        log.warning("no embedding model configured; using the hashing embedder")
        embedder = HashingEmbedder()
    return Gateway(chat, embedder, selector=selector, temperatures=temps), None


def apply_overrides(settings: Settings, overrides: list[str]) -> Settings:
    """Apply ``section.key=value`` (or ``max_corrections=value``) assignments.

    Values are read as JSON when possible, otherwise as plain text.
    """
    data: dict[str, Any] = {}
    for item in overrides:
        name, sep, raw = item.partition("=")
        if not sep:
            raise ValueError(f"override {item!r} must look like section.key=value")
        try:
            value = json.loads(raw)
        except json.JSONDecodeError:
            value = raw
        section, dot, key = name.strip().partition(".")
        if dot:
            data.setdefault(section, {})[key] = value
        else:
            data[section] = value
    if not data:
        return settings
    merged: dict[str, Any] = {}
    for name in _SECTIONS:
        if name in data:
            if not isinstance(data[name], dict):
                raise ValueError(f"override for section {name!r} needs a key")
            merged[name] = {**_as_dict(getattr(settings, name)), **data[name]}
    for name in ("max_corrections", "temperatures"):
        if name in data:
            merged[name] = {**settings.temperatures, **data[name]} if name == "temperatures" else data[name]
    unknown = sorted(set(data) - set(merged))
    if unknown:
        raise ValueError(f"unknown config keys: {unknown}")
    base = settings_from_dict(merged)
    keep = {name: getattr(settings, name) for name in ("refinement", "budget", "traversal", "sandbox", "provider", "max_corrections", "temperatures") if name not in merged}
    return replace(base, **keep)


def _as_dict(obj: Any) -> dict:
    return {f.name: getattr(obj, f.name) for f in fields(obj)}
