"""Text embedders: any function text -> fixed-dimension unit vector.

The hashed bag-of-tokens embedder is fully deterministic (stable digest
hashing, no process-salted hash()) and exists for tests and offline runs;
the HTTP client targets any embeddings-compatible endpoint.
"""

from __future__ import annotations

import hashlib
import re

import httpx
import numpy as np

from millwright.errors import BackendFailure

_TOKEN = re.compile(r"[a-z0-9]+")


class Embedder:
    dim: int

    def embed(self, text: str) -> np.ndarray:
        raise NotImplementedError


def _unit(vec: np.ndarray) -> np.ndarray:
    norm = float(np.linalg.norm(vec))
    if norm == 0.0:
        vec = np.zeros_like(vec)
        vec[0] = 1.0
        return vec
    return vec / norm


class HashedEmbedder(Embedder):
    def __init__(self, dim: int = 256):
        self.dim = dim

    def embed(self, text: str) -> np.ndarray:
        vec = np.zeros(self.dim, dtype=float)
        for token in _TOKEN.findall(text.lower()):
            h = int.from_bytes(hashlib.blake2b(token.encode(), digest_size=8).digest(), "big")
            sign = 1.0 if (h >> 1) % 2 == 0 else -1.0
            vec[h % self.dim] += sign
        return _unit(vec)


class HttpEmbedder(Embedder):
    def __init__(self, endpoint: str, model: str = "", dim: int = 0,
                 timeout: float = 30.0, transport: httpx.BaseTransport | None = None):
        self.endpoint = endpoint
        self.model = model
        self.dim = dim
        self._client = httpx.Client(base_url=endpoint, timeout=timeout, transport=transport)

    def embed(self, text: str) -> np.ndarray:
        try:
            response = self._client.post("/embeddings", json={"input": [text],
                                                              "model": self.model})
            response.raise_for_status()
            vec = np.array(response.json()["data"][0]["embedding"], dtype=float)
        except (httpx.HTTPError, KeyError, IndexError, ValueError) as exc:
            raise BackendFailure(f"embedding endpoint failed: {exc}") from None
        if self.dim == 0:
            self.dim = vec.size
        return _unit(vec)


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.dot(a, b))
