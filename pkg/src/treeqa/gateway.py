"""Model access: chat completion, embeddings, and their test doubles.

Every model call in the package goes through :class:`Gateway`, which stamps
the phase temperature on the request, routes selector traffic to its own
provider and keeps a request log that tests can audit.
"""

from __future__ import annotations

import hashlib
import json
import logging
import os
import re
import threading
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Callable, Iterable, Protocol, Sequence

import numpy as np

from .errors import ProviderError, TranscriptMiss, ZeroVector

log = logging.getLogger(__name__)


class Phase(str, Enum):
    CONSTRUCTION = "construction"
    NAVIGATION = "navigation"
    SYMBOLIC = "symbolic"
    SELECTION = "selection"
    JUDGE = "judge"


DEFAULT_TEMPERATURES: dict[Phase, float] = {
    Phase.CONSTRUCTION: 0.0,
    Phase.NAVIGATION: 0.3,
    Phase.SYMBOLIC: 0.3,
    Phase.SELECTION: 0.0,
    Phase.JUDGE: 0.3,
}


@dataclass(frozen=True)
class ChatRequest:
    system: str
    user: str
    temperature: float
    max_tokens: int
    phase: Phase
    purpose: str = ""

    def __post_init__(self) -> None:
        if not 0.0 <= self.temperature <= 2.0:
            raise ValueError(f"temperature {self.temperature} outside [0, 2]")

    def match_key(self) -> str:
        return request_key(self.system, self.user)


def _collapse(text: str) -> str:
    return re.sub(r"\s+", " ", text).strip()


def request_key(system: str, user: str) -> str:
    """Whitespace-insensitive fingerprint of a prompt."""
    digest = hashlib.sha256((_collapse(system) + "\x1e" + _collapse(user)).encode("utf-8"))
    return digest.hexdigest()


class ChatProvider(Protocol):
    def complete(self, req: ChatRequest) -> str: ...


class EmbeddingProvider(Protocol):
    def embed(self, texts: Sequence[str]) -> list[np.ndarray]: ...


# -- scripted providers -------------------------------------------------------


@dataclass
class ScriptEntry:
    """One transcript row.

    ``match`` may combine ``key`` (a :func:`request_key` digest), ``purpose``,
    ``phase`` and ``contains`` (a substring or list of substrings of the
    user prompt); every given criterion must hold. Entries are consumed once
    unless ``repeat`` is set.
    """

    response: str
    match: dict = field(default_factory=dict)
    repeat: bool = False
    latency: float = 0.0
    used: int = 0

    def matches(self, req: ChatRequest) -> bool:
        m = self.match
        if "key" in m and m["key"] != req.match_key():
            return False
        if "purpose" in m and m["purpose"] != req.purpose:
            return False
        if "phase" in m and m["phase"] != req.phase.value:
            return False
        if "contains" in m:
            needles = m["contains"]
            if isinstance(needles, str):
                needles = [needles]
            haystack = _collapse(req.user)
            if not all(_collapse(n) in haystack for n in needles):
                return False
        return True


class SimulatedClock:
    """Monotonic clock advanced only by scripted latencies."""

    def __init__(self) -> None:
        self.now = 0.0
        self._lock = threading.Lock()

    def __call__(self) -> float:
        return self.now

    def advance(self, seconds: float) -> None:
        with self._lock:
            self.now += seconds


class ScriptedChat:
    """Replays a transcript. Strict mode raises on any unmatched request."""

    def __init__(
        self,
        entries: Iterable[ScriptEntry | dict],
        *,
        strict: bool = True,
        default: str = "",
        clock: SimulatedClock | None = None,
    ):
        self.entries = [e if isinstance(e, ScriptEntry) else ScriptEntry(**e) for e in entries]
        self.strict = strict
        self.default = default
        self.clock = clock
        self._lock = threading.Lock()

    @classmethod
    def from_file(cls, path: str | Path, **kwargs) -> "ScriptedChat":
        data = json.loads(Path(path).read_text(encoding="utf-8"))
        if isinstance(data, dict):
            kwargs.setdefault("strict", data.get("strict", True))
            data = data["entries"]
        return cls(data, **kwargs)

    def complete(self, req: ChatRequest) -> str:
        with self._lock:
            for entry in self.entries:
                if entry.used and not entry.repeat:
                    continue
                if entry.matches(req):
                    entry.used += 1
                    if self.clock is not None:
                        self.clock.advance(entry.latency)
                    return entry.response
        if self.strict:
            raise TranscriptMiss(f"no transcript entry for {req.purpose or req.phase.value} request (key {req.match_key()[:12]})")
        return self.default

    def unused(self) -> list[ScriptEntry]:
        return [e for e in self.entries if not e.used]


class CallbackChat:
    """Answers every request with ``fn(request)``."""

    def __init__(self, fn: Callable[[ChatRequest], str]):
        self.fn = fn

    def complete(self, req: ChatRequest) -> str:
        return self.fn(req)


class HashingEmbedder:
    """Deterministic bag of character n-grams hashed into a fixed dimension."""

    def __init__(self, dim: int = 256, n: int = 3, seed: int = 0):
        self.dim = dim
        self.n = n
        self.seed = seed

    def _vector(self, text: str) -> np.ndarray:
        v = np.zeros(self.dim)
        padded = f" {text.lower()} "
        grams = [padded[i : i + self.n] for i in range(max(1, len(padded) - self.n + 1))] if text else []
        salt = self.seed.to_bytes(8, "little", signed=True)
        for g in grams:
            h = hashlib.blake2b(g.encode("utf-8"), digest_size=8, salt=salt[:8].ljust(16, b"\0")).digest()
            v[int.from_bytes(h[:4], "little") % self.dim] += 1.0
        return v

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        return [self._vector(t) for t in texts]


# -- live providers -----------------------------------------------------------


class HttpChat:
    """OpenAI-compatible ``/chat/completions`` client."""

    def __init__(self, base_url: str, model: str, *, api_key_env: str = "TREEQA_API_KEY", timeout: float = 120.0):
        import httpx

        self.model = model
        key = os.environ.get(api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers, timeout=timeout)
        self._httpx = httpx

    def complete(self, req: ChatRequest) -> str:
        messages = []
        if req.system:
            messages.append({"role": "system", "content": req.system})
        messages.append({"role": "user", "content": req.user})
        payload = {"model": self.model, "messages": messages, "temperature": req.temperature, "max_tokens": req.max_tokens}
        try:
            resp = self._client.post("/chat/completions", json=payload)
        except self._httpx.TransportError as exc:
            raise ProviderError(f"transport failure: {exc}", transient=True) from exc
        if resp.status_code == 429 or resp.status_code >= 500:
            raise ProviderError(f"HTTP {resp.status_code}", transient=True)
        if resp.status_code >= 400:
            raise ProviderError(f"HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            return resp.json()["choices"][0]["message"]["content"] or ""
        except (KeyError, IndexError, ValueError) as exc:
            raise ProviderError(f"unexpected completion payload: {exc}") from exc


class HttpEmbedder:
    """OpenAI-compatible ``/embeddings`` client."""

    def __init__(self, base_url: str, model: str, *, api_key_env: str = "TREEQA_API_KEY", timeout: float = 60.0):
        import httpx

        self.model = model
        key = os.environ.get(api_key_env, "")
        headers = {"Authorization": f"Bearer {key}"} if key else {}
        self._client = httpx.Client(base_url=base_url.rstrip("/"), headers=headers, timeout=timeout)
        self._httpx = httpx

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        if not texts:
            return []
        try:
            resp = self._client.post("/embeddings", json={"model": self.model, "input": list(texts)})
        except self._httpx.TransportError as exc:
            raise ProviderError(f"transport failure: {exc}", transient=True) from exc
        if resp.status_code >= 400:
            raise ProviderError(f"HTTP {resp.status_code}", transient=resp.status_code >= 500)
        rows = sorted(resp.json()["data"], key=lambda d: d["index"])
        return [np.asarray(r["embedding"], dtype=float) for r in rows]


class RetryingChat:
    """Retries transient provider failures up to ``retries`` extra attempts."""

    def __init__(self, inner: ChatProvider, retries: int = 3, backoff: float = 0.0, sleep: Callable[[float], None] = time.sleep):
        self.inner = inner
        self.retries = retries
        self.backoff = backoff
        self.sleep = sleep
        self.last_attempts = 0

    def complete(self, req: ChatRequest) -> str:
        attempt = 0
        while True:
            attempt += 1
            self.last_attempts = attempt
            try:
                return self.inner.complete(req)
            except ProviderError as exc:
                if not exc.transient or attempt > self.retries:
                    raise
                log.warning("transient provider failure (attempt %d): %s", attempt, exc)
                if self.backoff:
                    self.sleep(self.backoff * 2 ** (attempt - 1))


# -- similarity ---------------------------------------------------------------


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.shape != b.shape:
        raise ValueError(f"dimension mismatch {a.shape} vs {b.shape}")
    na, nb = float(np.linalg.norm(a)), float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        raise ZeroVector("cosine of a zero vector")
    return max(-1.0, min(1.0, float(np.dot(a, b)) / (na * nb)))


# -- the gateway --------------------------------------------------------------


@dataclass
class LogEntry:
    request: ChatRequest
    response: str | None
    error: str | None = None


class Gateway:
    """Single entry point for model traffic."""

    def __init__(
        self,
        chat: ChatProvider,
        embedder: EmbeddingProvider | None = None,
        *,
        selector: ChatProvider | None = None,
        temperatures: dict[Phase, float] | None = None,
        max_tokens: int = 4096,
    ):
        self.chat = chat
        self.embedder = embedder or HashingEmbedder()
        self.selector = selector
        self.temperatures = {**DEFAULT_TEMPERATURES, **(temperatures or {})}
        self.max_tokens = max_tokens
        self.log: list[LogEntry] = []
        self._lock = threading.Lock()
        self._embed_cache: dict[str, np.ndarray] = {}

    def ask(
        self,
        phase: Phase,
        user: str,
        *,
        system: str = "",
        purpose: str = "",
        temperature: float | None = None,
        max_tokens: int | None = None,
    ) -> str:
        req = ChatRequest(
            system=system,
            user=user,
            temperature=self.temperatures[phase] if temperature is None else temperature,
            max_tokens=max_tokens or self.max_tokens,
            phase=phase,
            purpose=purpose,
        )
        provider = self.selector if (phase is Phase.SELECTION and self.selector is not None) else self.chat
        try:
            text = provider.complete(req)
        except Exception as exc:
            with self._lock:
                self.log.append(LogEntry(req, None, f"{type(exc).__name__}: {exc}"))
            raise
        with self._lock:
            self.log.append(LogEntry(req, text))
        return text

    def embed(self, texts: Sequence[str]) -> list[np.ndarray]:
        missing = [t for t in dict.fromkeys(texts) if t not in self._embed_cache]
        if missing:
            vectors = self.embedder.embed(missing)
            if len(vectors) != len(missing):
                raise ProviderError("embedding provider returned the wrong number of vectors")
            with self._lock:
                self._embed_cache.update(zip(missing, vectors))
        return [self._embed_cache[t] for t in texts]

    def requests(self, *, phase: Phase | None = None, purpose: str | None = None) -> list[ChatRequest]:
        return [
            e.request
            for e in self.log
            if (phase is None or e.request.phase is phase) and (purpose is None or e.request.purpose == purpose)
        ]
