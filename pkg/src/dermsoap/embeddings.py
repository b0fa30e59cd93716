"""Embedding providers: the deterministic offline stub and the HTTP client.

Providers return L2-normalized sentence vectors (or an all-zero vector for
empty text) and per-token vectors for the greedy-matching embedding metric.
Cosine against a zero vector is defined as 0 so empty inputs never crash a
metric.
"""

from __future__ import annotations

import hashlib
from typing import Optional, Protocol, Sequence

import numpy as np
import requests

from .errors import ProviderError
from .textnorm import tokenize

__all__ = ["EmbeddingProvider", "StubEmbedder", "RemoteEmbeddingClient", "cosine", "cosine_matrix"]


class EmbeddingProvider(Protocol):
    @property
    def dim(self) -> int: ...

    def embed_text(self, text: str) -> np.ndarray: ...

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray: ...

    def embed_tokens(self, text: str) -> tuple[list[str], np.ndarray]: ...


def cosine(a: np.ndarray, b: np.ndarray) -> float:
    na = float(np.linalg.norm(a))
    nb = float(np.linalg.norm(b))
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a, b) / (na * nb))


def cosine_matrix(rows: np.ndarray, cols: np.ndarray) -> np.ndarray:
    """Pairwise cosine, zero-vector rows/columns scoring 0."""
    rn = np.linalg.norm(rows, axis=1)
    cn = np.linalg.norm(cols, axis=1)
    denom = np.outer(rn, cn)
    with np.errstate(divide="ignore", invalid="ignore"):
        sims = np.where(denom > 0.0, rows @ cols.T / np.where(denom == 0.0, 1.0, denom), 0.0)
    return sims


class StubEmbedder:
    """Offline deterministic provider.

    Each case-folded token maps to a unit vector derived from a seeded hash,
    so equal token multisets embed identically on any platform. The sentence
    vector is the L2-normalized mean of the token vectors; empty text maps to
    the zero vector.
    """

    def __init__(self, dim: int = 64, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self._dim = dim
        self._seed = seed
        self._cache: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def seed(self) -> int:
        return self._seed

    def _token_vector(self, token: str) -> np.ndarray:
        vec = self._cache.get(token)
        if vec is not None:
            return vec
        material = f"{self._seed}:{token}".encode("utf-8")
        raw = bytearray()
        counter = 0
        while len(raw) < self._dim * 8:
            raw += hashlib.sha256(material + counter.to_bytes(4, "big")).digest()
            counter += 1
        ints = np.frombuffer(bytes(raw[: self._dim * 8]), dtype=">u8")
        vec = ints.astype(np.float64) / 2.0**63 - 1.0
        vec = vec / np.linalg.norm(vec)
        vec.setflags(write=False)
        self._cache[token] = vec
        return vec

    def embed_text(self, text: str) -> np.ndarray:
        tokens = tokenize(text)
        if not tokens:
            return np.zeros(self._dim)
        mean = np.mean([self._token_vector(t) for t in tokens], axis=0)
        norm = np.linalg.norm(mean)
        if norm < 1e-12:
            return np.zeros(self._dim)
        return mean / norm

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self._dim))
        return np.stack([self.embed_text(t) for t in texts])

    def embed_tokens(self, text: str) -> tuple[list[str], np.ndarray]:
        tokens = tokenize(text)
        if not tokens:
            return [], np.zeros((0, self._dim))
        return tokens, np.stack([self._token_vector(t) for t in tokens])


class RemoteEmbeddingClient:
    """HTTP provider speaking the sidecar protocol.

    POST {base}/embed        {"texts": [...]} -> {"dim": D, "vectors": [[...], ...]}
    POST {base}/embed_tokens {"text": ...}    -> {"tokens": [...], "vectors": [[...], ...]}
    GET  {base}/health                        -> {"status": "ok", "dim": D, ...}
    """

    def __init__(
        self,
        base_url: str,
        dim: Optional[int] = None,
        timeout: float = 30.0,
        session: Optional[requests.Session] = None,
    ):
        self.base_url = base_url.rstrip("/")
        self.timeout = timeout
        self._session = session or requests.Session()
        self._dim = dim

    @property
    def dim(self) -> int:
        if self._dim is None:
            health = self._get("/health")
            dim = health.get("dim")
            if not isinstance(dim, int) or dim <= 0:
                raise ProviderError(f"provider at {self.base_url} reported bad dim: {dim!r}")
            self._dim = dim
        return self._dim

    def _get(self, route: str) -> dict:
        try:
            resp = self._session.get(self.base_url + route, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise ProviderError(f"GET {route} failed: {exc}") from exc

    def _post(self, route: str, payload: dict) -> dict:
        try:
            resp = self._session.post(self.base_url + route, json=payload, timeout=self.timeout)
            resp.raise_for_status()
            return resp.json()
        except (requests.RequestException, ValueError) as exc:
            raise ProviderError(f"POST {route} failed: {exc}") from exc

    def embed_texts(self, texts: Sequence[str]) -> np.ndarray:
        texts = list(texts)
        if not texts:
            return np.zeros((0, self.dim))
        body = self._post("/embed", {"texts": texts})
        vectors = body.get("vectors")
        if not isinstance(vectors, list) or len(vectors) != len(texts):
            raise ProviderError("embed response does not match request size")
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise ProviderError(
                f"embed returned shape {matrix.shape}, expected (*, {self.dim})"
            )
        return matrix

    def embed_text(self, text: str) -> np.ndarray:
        return self.embed_texts([text])[0]

    def embed_tokens(self, text: str) -> tuple[list[str], np.ndarray]:
        body = self._post("/embed_tokens", {"text": text})
        tokens = body.get("tokens")
        vectors = body.get("vectors")
        if not isinstance(tokens, list) or not isinstance(vectors, list):
            raise ProviderError("embed_tokens response missing tokens/vectors")
        if len(tokens) != len(vectors):
            raise ProviderError("embed_tokens returned mismatched tokens and vectors")
        if not tokens:
            return [], np.zeros((0, self.dim))
        matrix = np.asarray(vectors, dtype=np.float64)
        if matrix.ndim != 2 or matrix.shape[1] != self.dim:
            raise ProviderError(
                f"embed_tokens returned shape {matrix.shape}, expected (*, {self.dim})"
            )
        return [str(t) for t in tokens], matrix
