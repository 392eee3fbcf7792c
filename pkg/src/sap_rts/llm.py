"""Minimal chat-completion client for the optional remote planner/recognizer.

Talks to any OpenAI-compatible ``/chat/completions`` endpoint. Endpoint and
key come from environment variables so they never land in config files.
"""

from __future__ import annotations

import logging
import os

import httpx

log = logging.getLogger(__name__)

URL_ENV = "SAP_LLM_URL"
KEY_ENV = "SAP_LLM_API_KEY"
MODEL_ENV = "SAP_LLM_MODEL"


class LLMError(RuntimeError):
    pass


class ChatClient:
    def __init__(self, url: str, api_key: str | None = None, model: str = "default",
                 timeout: float = 30.0, retries: int = 1, temperature: float = 0.0,
                 transport: httpx.BaseTransport | None = None):
        self.url = url.rstrip("/")
        self.model = model
        self.retries = retries
        self.temperature = temperature
        headers = {"Authorization": f"Bearer {api_key}"} if api_key else {}
        self._http = httpx.Client(timeout=timeout, headers=headers, transport=transport)

    @classmethod
    def from_env(cls, url_env: str = URL_ENV, key_env: str = KEY_ENV, model_env: str = MODEL_ENV,
                 **kw) -> "ChatClient":
        url = os.environ.get(url_env)
        if not url:
            raise LLMError(f"${url_env} is not set")
        return cls(url, os.environ.get(key_env), os.environ.get(model_env, "default"), **kw)

    def complete(self, system: str, user: str) -> str:
        body = {
            "model": self.model,
            "temperature": self.temperature,
            "messages": [{"role": "system", "content": system}, {"role": "user", "content": user}],
        }
        last: Exception | None = None
        for attempt in range(self.retries + 1):
            try:
                r = self._http.post(f"{self.url}/chat/completions", json=body)
                r.raise_for_status()
                return r.json()["choices"][0]["message"]["content"]
            except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
                last = exc
                log.warning("chat request failed (attempt %d): %s", attempt + 1, exc)
        raise LLMError(f"chat request failed: {last}") from last

    def close(self) -> None:
        self._http.close()
