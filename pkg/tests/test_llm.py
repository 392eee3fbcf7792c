import json

import httpx
import pytest

from sap_rts.llm import ChatClient, LLMError


def _client(handler, **kw):
    return ChatClient("http://llm.test/v1/", "secret", "m1", transport=httpx.MockTransport(handler), **kw)


def test_complete_sends_chat_request():
    seen = {}

    def handler(request):
        seen["url"] = str(request.url)
        seen["auth"] = request.headers.get("authorization")
        seen["body"] = json.loads(request.content)
        return httpx.Response(200, json={"choices": [{"message": {"content": "HARVEST_MINERAL workers=1"}}]})

    assert _client(handler).complete("sys", "hello") == "HARVEST_MINERAL workers=1"
    assert seen["url"] == "http://llm.test/v1/chat/completions"
    assert seen["auth"] == "Bearer secret"
    assert seen["body"]["model"] == "m1" and seen["body"]["messages"][1]["content"] == "hello"


def test_retries_then_raises():
    calls = []

    def handler(request):
        calls.append(1)
        return httpx.Response(500)

    with pytest.raises(LLMError):
        _client(handler, retries=2).complete("s", "u")
    assert len(calls) == 3


def test_malformed_reply_raises():
    with pytest.raises(LLMError):
        _client(lambda r: httpx.Response(200, json={"nope": 1})).complete("s", "u")


def test_from_env(monkeypatch):
    monkeypatch.delenv("SAP_LLM_URL", raising=False)
    with pytest.raises(LLMError):
        ChatClient.from_env()
    monkeypatch.setenv("SAP_LLM_URL", "http://x")
    monkeypatch.setenv("SAP_LLM_MODEL", "tiny")
    c = ChatClient.from_env()
    assert c.url == "http://x" and c.model == "tiny"
    c.close()
