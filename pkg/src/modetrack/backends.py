"""Agent and encoder backends.

Two wire contracts are supported for live runs:

* chat agents: HTTP chat-completion endpoint taking a system prompt plus a
  user prompt and returning text,
* encoders: HTTP embedding endpoint taking a list of texts and returning one
  vector per text.

Credentials and endpoints come from environment variables so no secret ever
lands in a config file:

* ``MODETRACK_CHAT_URL`` / ``MODETRACK_CHAT_KEY`` / ``MODETRACK_CHAT_MODEL``
* ``MODETRACK_EMBED_URL`` / ``MODETRACK_EMBED_KEY`` / ``MODETRACK_EMBED_MODEL``

Offline work uses the deterministic doubles defined here (scripted/callable
agents, hash encoder); the full pipeline is reproducible with them.
"""

from __future__ import annotations

import hashlib
import logging
import os
import time
from typing import Callable, Protocol, Sequence

import numpy as np

from .errors import BackendUnavailable

log = logging.getLogger(__name__)

CHAT_URL_ENV = "MODETRACK_CHAT_URL"
CHAT_KEY_ENV = "MODETRACK_CHAT_KEY"
CHAT_MODEL_ENV = "MODETRACK_CHAT_MODEL"
EMBED_URL_ENV = "MODETRACK_EMBED_URL"
EMBED_KEY_ENV = "MODETRACK_EMBED_KEY"
EMBED_MODEL_ENV = "MODETRACK_EMBED_MODEL"


class AgentBackend(Protocol):
    """Text-completion agent: (system prompt, user prompt) -> reply text."""

    def complete(self, system_prompt: str, user_prompt: str) -> str: ...


class EncoderBackend(Protocol):
    """Sentence encoder: list of texts -> one vector per text."""

    #: stable identifier used in embedding cache keys
    encoder_id: str

    def encode(self, texts: Sequence[str]) -> np.ndarray: ...


class HttpChatAgent:
    """Chat-completion client for an OpenAI-style endpoint."""

    def __init__(self, url: str | None = None, api_key: str | None = None,
                 model: str | None = None, timeout: float = 60.0):
        self.url = url or os.environ.get(CHAT_URL_ENV)
        self.api_key = api_key or os.environ.get(CHAT_KEY_ENV)
        self.model = model or os.environ.get(CHAT_MODEL_ENV)
        self.timeout = timeout
        if not self.url or not self.model:
            raise BackendUnavailable(
                f"chat backend not configured; set {CHAT_URL_ENV} and {CHAT_MODEL_ENV}")
        self.calls = 0

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        import requests

        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": system_prompt},
                {"role": "user", "content": user_prompt},
            ],
        }
        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self.calls += 1
        try:
            resp = requests.post(self.url, json=payload, headers=headers,
                                 timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
            return body["choices"][0]["message"]["content"]
        except BackendUnavailable:
            raise
        except Exception as exc:  # transport, HTTP status, shape errors alike
            raise BackendUnavailable(f"chat backend failed: {exc}") from exc


class HttpEncoder:
    """Embedding client for an OpenAI-style /embeddings endpoint."""

    def __init__(self, url: str | None = None, api_key: str | None = None,
                 model: str | None = None, timeout: float = 60.0):
        self.url = url or os.environ.get(EMBED_URL_ENV)
        self.api_key = api_key or os.environ.get(EMBED_KEY_ENV)
        self.model = model or os.environ.get(EMBED_MODEL_ENV)
        self.timeout = timeout
        if not self.url or not self.model:
            raise BackendUnavailable(
                f"encoder backend not configured; set {EMBED_URL_ENV} and {EMBED_MODEL_ENV}")
        self.encoder_id = f"http:{self.model}"
        self.calls = 0

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        import requests

        headers = {"Content-Type": "application/json"}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        self.calls += 1
        try:
            resp = requests.post(self.url, json={"model": self.model, "input": list(texts)},
                                 headers=headers, timeout=self.timeout)
            resp.raise_for_status()
            body = resp.json()
            rows = sorted(body["data"], key=lambda d: d["index"])
            return np.asarray([r["embedding"] for r in rows], dtype=np.float64)
        except Exception as exc:
            raise BackendUnavailable(f"encoder backend failed: {exc}") from exc


class CallableAgent:
    """Wraps a plain function as an agent backend (test/offline use)."""

    def __init__(self, fn: Callable[[str, str], str]):
        self._fn = fn
        self.calls = 0

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        self.calls += 1
        return self._fn(system_prompt, user_prompt)


class ScriptedAgent:
    """Returns canned replies in order; raises when the script runs out."""

    def __init__(self, replies: Sequence[str]):
        self._replies = list(replies)
        self.calls = 0

    def complete(self, system_prompt: str, user_prompt: str) -> str:
        if self.calls >= len(self._replies):
            raise BackendUnavailable("scripted agent exhausted")
        reply = self._replies[self.calls]
        self.calls += 1
        return reply


def _token_seed(token: str, salt: str) -> int:
    digest = hashlib.blake2b(f"{salt}\x00{token}".encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "big")


class HashEncoder:
    """Deterministic offline encoder.

    Each token maps to a pseudo-random unit vector seeded from a digest of the
    token; a text's embedding is the renormalised sum of its token vectors.
    Texts sharing vocabulary therefore land close together, which is exactly
    what the synthetic theme corpus needs.
    """

    def __init__(self, dim: int = 64, salt: str = "modetrack"):
        if dim < 2:
            raise ValueError("encoder dim must be >= 2")
        self.dim = dim
        self.salt = salt
        self.encoder_id = f"hash:{salt}:{dim}"
        self.calls = 0
        self._token_cache: dict[str, np.ndarray] = {}

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._token_cache.get(token)
        if vec is None:
            rng = np.random.default_rng(_token_seed(token, self.salt))
            vec = rng.standard_normal(self.dim)
            vec /= np.linalg.norm(vec)
            self._token_cache[token] = vec
        return vec

    @staticmethod
    def tokenize(text: str) -> list[str]:
        out, word = [], []
        for ch in text.lower():
            if ch.isalnum():
                word.append(ch)
            elif word:
                out.append("".join(word))
                word = []
        if word:
            out.append("".join(word))
        return out

    def encode(self, texts: Sequence[str]) -> np.ndarray:
        self.calls += 1
        rows = np.zeros((len(texts), self.dim))
        for i, text in enumerate(texts):
            tokens = self.tokenize(text)
            if not tokens:
                tokens = ["empty"]
            acc = np.zeros(self.dim)
            for tok in tokens:
                acc += self._token_vector(tok)
            norm = np.linalg.norm(acc)
            if norm == 0.0:  # opposing tokens cancelled out; fall back to a marker
                acc = self._token_vector("\x00cancelled")
                norm = np.linalg.norm(acc)
            rows[i] = acc / norm
        return rows


def with_retries(call: Callable[[], str], attempts: int = 3, base_delay: float = 0.5,
                 sleep: Callable[[float], None] = time.sleep) -> str:
    """Run ``call``, retrying ``BackendUnavailable`` with exponential backoff."""
    last: BackendUnavailable | None = None
    for i in range(attempts):
        try:
            return call()
        except BackendUnavailable as exc:
            last = exc
            if i < attempts - 1:
                delay = base_delay * (2.0 ** i)
                log.warning("backend unavailable (%s); retrying in %.1fs", exc, delay)
                sleep(delay)
    assert last is not None
    raise last
