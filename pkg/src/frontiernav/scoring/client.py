"""HTTP client for a remote vision-language model.

Each adapter turns ``(prompt, image)`` into a request body and pulls the reply
text out of the response body, so the client itself stays provider-neutral.
"""

from __future__ import annotations

import base64
import json
import os
import time
import urllib.error
import urllib.request

import numpy as np

from ..errors import ConfigurationError, EndpointError
from .marks import encode_png, encode_ppm

DEFAULT_TOKEN_ENV = "FRONTIERNAV_VLM_TOKEN"


class SimpleAdapter:
    """``{model, prompt, image, max_tokens}`` in, ``{"text": ...}`` out; image is base64 PPM."""

    name = "simple"

    def request_body(self, model: str, prompt: str, image: np.ndarray, max_tokens: int) -> dict:
        return {
            "model": model,
            "prompt": prompt,
            "image": base64.b64encode(encode_ppm(image)).decode("ascii"),
            "max_tokens": max_tokens,
        }

    def reply_text(self, body: dict) -> str:
        return str(body["text"])


class ChatCompletionsAdapter:
    """OpenAI-style chat completions with the image as a PNG data URL."""

    name = "chat"

    def request_body(self, model: str, prompt: str, image: np.ndarray, max_tokens: int) -> dict:
        url = "data:image/png;base64," + base64.b64encode(encode_png(image)).decode("ascii")
        return {
            "model": model,
            "max_tokens": max_tokens,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {"type": "image_url", "image_url": {"url": url}},
                    ],
                }
            ],
        }

    def reply_text(self, body: dict) -> str:
        return str(body["choices"][0]["message"]["content"])


ADAPTERS = {a.name: a for a in (SimpleAdapter(), ChatCompletionsAdapter())}


class VLMClient:
    def __init__(
        self,
        endpoint: str,
        model: str,
        adapter: str = "simple",
        token_env: str = DEFAULT_TOKEN_ENV,
        timeout: float = 30.0,
        retries: int = 2,
        max_tokens: int = 512,
        backoff: float = 0.5,
    ):
        if not endpoint:
            raise ConfigurationError("a VLM endpoint URL is required")
        if adapter not in ADAPTERS:
            raise ConfigurationError(f"unknown adapter {adapter!r}; choose from {sorted(ADAPTERS)}")
        token = os.environ.get(token_env)
        if not token:
            raise ConfigurationError(f"environment variable {token_env} holding the VLM token is not set")
        self.endpoint = endpoint
        self.model = model
        self.adapter = ADAPTERS[adapter]
        self.timeout = timeout
        self.retries = retries
        self.max_tokens = max_tokens
        self.backoff = backoff
        self._token = token

    def complete(self, prompt: str, image: np.ndarray) -> str:
        body = json.dumps(self.adapter.request_body(self.model, prompt, image, self.max_tokens)).encode("utf-8")
        last = None
        for attempt in range(self.retries + 1):
            req = urllib.request.Request(
                self.endpoint,
                data=body,
                headers={"Content-Type": "application/json", "Authorization": f"Bearer {self._token}"},
                method="POST",
            )
            try:
                with urllib.request.urlopen(req, timeout=self.timeout) as resp:
                    return self.adapter.reply_text(json.loads(resp.read().decode("utf-8")))
            except urllib.error.HTTPError as exc:
                last = exc
                if 400 <= exc.code < 500 and exc.code != 429:
                    break
            except (urllib.error.URLError, TimeoutError, OSError, ValueError, KeyError, IndexError, TypeError) as exc:
                last = exc
            if attempt < self.retries:
                time.sleep(self.backoff * (2**attempt))
        raise EndpointError(f"VLM request to {self.endpoint} failed: {last}")
