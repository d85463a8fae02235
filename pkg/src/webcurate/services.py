"""Clients for the external scoring, safety, embedding, and generation
services, plus deterministic local stand-ins usable offline.

Service specs are strings: ``http(s)://...`` selects an HTTP client,
``local:`` the built-in embedding, ``const:X`` a fixed-score client (handy
for dry runs). Wire contracts: scorer and safety-detector endpoints take a
POST body of PNG bytes and answer a single decimal number; the embedding
endpoint answers a JSON array of floats; the generator is a chat-completion
style JSON endpoint taking (image, prompt) and returning text.
"""

from __future__ import annotations

import base64
import io
import re
import time
from typing import Optional, Protocol, Sequence

import httpx
import numpy as np
from PIL import Image

from .errors import ConfigError, ProtocolError, ScoreUnavailable


def cosine(a: Sequence[float], b: Sequence[float]) -> float:
    va = np.asarray(a, dtype=np.float64)
    vb = np.asarray(b, dtype=np.float64)
    na = float(np.linalg.norm(va))
    nb = float(np.linalg.norm(vb))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(va, vb) / (na * nb))


class EmbeddingClient(Protocol):
    def embed_image(self, png: bytes) -> list[float]: ...


class LocalImageEmbedding:
    """Deterministic embedding: mean-centered grid pixels plus a luminance
    histogram.

    Downscaling to the grid makes the vector robust to uniform resizing;
    centering turns the pixel block into a correlation so near-blank pages do
    not all collapse to similarity 1; the histogram keeps uniform images
    (all-black vs all-white) distinguishable where centering zeroes out.
    """

    HIST_BINS = 8
    HIST_WEIGHT = 0.5

    def __init__(self, grid: int = 16):
        self.grid = grid

    def embed_image(self, png: bytes) -> list[float]:
        image = Image.open(io.BytesIO(png)).convert("RGB")
        small = np.asarray(
            image.resize((self.grid, self.grid), Image.LANCZOS), dtype=np.float64
        )
        pixels = small.reshape(-1)
        centered = pixels - pixels.mean()
        norm = np.linalg.norm(centered)
        if norm > 0.0:
            centered = centered / norm
        luminance = small.mean(axis=2).reshape(-1)
        hist, _ = np.histogram(luminance, bins=self.HIST_BINS, range=(0.0, 256.0))
        hist = hist.astype(np.float64) / max(hist.sum(), 1)
        vector = np.concatenate([centered, self.HIST_WEIGHT * hist])
        total = np.linalg.norm(vector)
        return (vector / (total or 1.0)).tolist()


def _with_retries(fn, attempts: int = 3, backoff: float = 0.2):
    last: Optional[Exception] = None
    for attempt in range(attempts):
        try:
            return fn()
        except (httpx.HTTPError, OSError) as exc:
            last = exc
            if attempt + 1 < attempts:
                time.sleep(backoff * (2**attempt))
    raise ScoreUnavailable(f"service unreachable after {attempts} attempts: {last}")


class HttpEmbeddingClient:
    def __init__(self, url: str, timeout: float = 30.0, attempts: int = 3, backoff: float = 0.2):
        self.url = url
        self.timeout = timeout
        self.attempts = attempts
        self.backoff = backoff

    def embed_image(self, png: bytes) -> list[float]:
        def post():
            response = httpx.post(
                self.url, content=png, headers={"content-type": "image/png"}, timeout=self.timeout
            )
            response.raise_for_status()
            return response.json()

        data = _with_retries(post, self.attempts, self.backoff)
        if not isinstance(data, list) or not data:
            raise ProtocolError(f"embedding endpoint returned {type(data).__name__}, wanted list")
        return [float(x) for x in data]


class ScoreClient:
    """POST PNG bytes, read back one decimal score within [lo, hi]."""

    def __init__(
        self,
        url: str,
        score_range: tuple[float, float],
        timeout: float = 30.0,
        attempts: int = 3,
        backoff: float = 0.2,
    ):
        self.url = url
        self.lo, self.hi = score_range
        self.timeout = timeout
        self.attempts = attempts
        self.backoff = backoff

    def score(self, png: bytes) -> float:
        def post():
            response = httpx.post(
                self.url, content=png, headers={"content-type": "image/png"}, timeout=self.timeout
            )
            response.raise_for_status()
            return response.text.strip()

        text = _with_retries(post, self.attempts, self.backoff)
        try:
            value = float(text)
        except ValueError as exc:
            raise ProtocolError(f"scorer returned non-numeric {text!r}") from exc
        if not (self.lo <= value <= self.hi):
            raise ProtocolError(f"score {value} outside [{self.lo}, {self.hi}]")
        return value


class ConstScoreClient:
    def __init__(self, value: float, score_range: tuple[float, float]):
        lo, hi = score_range
        if not (lo <= value <= hi):
            raise ConfigError(f"const score {value} outside [{lo}, {hi}]")
        self.value = value

    def score(self, png: bytes) -> float:
        return self.value


def make_embedding_client(spec: str) -> EmbeddingClient:
    if spec == "local:" or spec == "local":
        return LocalImageEmbedding()
    if spec.startswith(("http://", "https://")):
        return HttpEmbeddingClient(spec)
    raise ConfigError(f"unknown embedding service spec: {spec!r}")


def make_score_client(spec: str, score_range: tuple[float, float]):
    if spec.startswith("const:"):
        return ConstScoreClient(float(spec.split(":", 1)[1]), score_range)
    if spec.startswith(("http://", "https://")):
        return ScoreClient(spec, score_range)
    raise ConfigError(f"unknown score service spec: {spec!r}")


# -- generation --------------------------------------------------------------


class Generator(Protocol):
    name: str

    def generate(self, prompt: str, screenshot: bytes, reference_html: Optional[str]) -> str: ...


class EchoGenerator:
    """Returns the reference HTML verbatim; the metric-fixpoint oracle."""

    name = "echo"

    def generate(self, prompt: str, screenshot: bytes, reference_html: Optional[str]) -> str:
        if reference_html is None:
            raise ValueError("echo generator needs the reference HTML")
        return reference_html


class EmptyGenerator:
    name = "empty"

    def generate(self, prompt: str, screenshot: bytes, reference_html: Optional[str]) -> str:
        return "<html></html>"


class HttpGenerator:
    """Chat-completion style endpoint: image + prompt in, text out."""

    name = "http"

    def __init__(self, url: str, model: str = "default", timeout: float = 120.0, attempts: int = 3):
        self.url = url
        self.model = model
        self.timeout = timeout
        self.attempts = attempts
        self.name = f"http:{url}"

    def generate(self, prompt: str, screenshot: bytes, reference_html: Optional[str]) -> str:
        payload = {
            "model": self.model,
            "messages": [
                {
                    "role": "user",
                    "content": [
                        {"type": "text", "text": prompt},
                        {
                            "type": "image_url",
                            "image_url": {
                                "url": "data:image/png;base64,"
                                + base64.b64encode(screenshot).decode()
                            },
                        },
                    ],
                }
            ],
        }

        def post():
            response = httpx.post(self.url, json=payload, timeout=self.timeout)
            response.raise_for_status()
            return response.json()

        data = _with_retries(post, self.attempts)
        try:
            return data["choices"][0]["message"]["content"]
        except (KeyError, IndexError, TypeError) as exc:
            raise ProtocolError(f"generator reply missing choices[0].message.content: {exc}") from exc


def make_generator(spec: str) -> Generator:
    if spec == "echo":
        return EchoGenerator()
    if spec == "empty":
        return EmptyGenerator()
    if spec.startswith(("http://", "https://")):
        return HttpGenerator(spec)
    raise ConfigError(f"unknown generator spec: {spec!r}")


_FENCE = re.compile(r"^```[a-zA-Z]*\n(.*?)\n?```\s*$", re.S)


def strip_markdown_fences(text: str) -> str:
    """Peel one layer of ``` fences when a reply is wrapped in them."""
    stripped = text.strip()
    match = _FENCE.match(stripped)
    if match:
        return match.group(1)
    return text
