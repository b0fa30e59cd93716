"""Sentence/token encoders behind the /embed endpoints.

Both encoders return unit-norm float vectors. Sentence pooling is the mean of
token vectors (for the transformer, the mean of last-layer hidden states),
L2-normalized; the pooling choice is reported by /health so downstream scores
are labeled rather than silently incomparable.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np


class Encoder(Protocol):
    dim: int
    pooling: str
    name: str

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray: ...

    def encode_tokens(self, text: str) -> tuple[list[str], np.ndarray]: ...


class HashEncoder:
    """Deterministic offline encoder: one keyed-hash unit vector per token.

    Runs anywhere, needs no model download, and is stable across processes,
    which makes it the default for development and protocol tests. Empty text
    maps to a fixed sentinel vector so every reply stays unit-norm.
    """

    pooling = "mean"

    def __init__(self, dim: int = 384, seed: int = 0):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self.dim = dim
        self.seed = seed
        self.name = f"hash-{dim}"
        self._cache: dict[str, np.ndarray] = {}

    def _vector_for(self, token: str) -> np.ndarray:
        hit = self._cache.get(token)
        if hit is not None:
            return hit
        needed = self.dim * 4
        blocks = []
        counter = 0
        while sum(len(b) for b in blocks) < needed:
            digest = hashlib.blake2b(
                f"{counter}|{token}".encode("utf-8"),
                key=str(self.seed).encode("utf-8"),
                digest_size=64,
            ).digest()
            blocks.append(digest)
            counter += 1
        raw = b"".join(blocks)[:needed]
        ints = np.frombuffer(raw, dtype="<u4").astype(np.float64)
        vec = ints / 2.0**31 - 1.0
        vec /= np.linalg.norm(vec)
        vec.setflags(write=False)
        self._cache[token] = vec
        return vec

    @staticmethod
    def _tokens(text: str) -> list[str]:
        return [t for t in text.lower().split() if t]

    def encode_tokens(self, text: str) -> tuple[list[str], np.ndarray]:
        tokens = self._tokens(text)
        if not tokens:
            return [], np.zeros((0, self.dim))
        return tokens, np.stack([self._vector_for(t) for t in tokens])

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        rows = []
        for text in texts:
            tokens = self._tokens(text)
            if not tokens:
                rows.append(self._vector_for("\x00empty"))
                continue
            mean = np.mean([self._vector_for(t) for t in tokens], axis=0)
            norm = np.linalg.norm(mean)
            if norm < 1e-12:
                rows.append(self._vector_for("\x00empty"))
            else:
                rows.append(mean / norm)
        return np.stack(rows)


class TransformerEncoder:
    """Wraps a HuggingFace encoder; mean pooling over the last hidden layer."""

    pooling = "mean"

    def __init__(self, model_name: str):
        # heavy imports stay local so the hash path never needs torch
        import torch
        from transformers import AutoModel, AutoTokenizer

        self._torch = torch
        self.name = model_name
        self.tokenizer = AutoTokenizer.from_pretrained(model_name)
        self.model = AutoModel.from_pretrained(model_name)
        self.model.eval()
        self.dim = int(self.model.config.hidden_size)

    def _last_hidden(self, texts: Sequence[str]):
        torch = self._torch
        batch = self.tokenizer(
            list(texts), padding=True, truncation=True, return_tensors="pt"
        )
        with torch.no_grad():
            output = self.model(**batch)
        return batch, output.last_hidden_state

    def encode_texts(self, texts: Sequence[str]) -> np.ndarray:
        if not texts:
            return np.zeros((0, self.dim))
        batch, hidden = self._last_hidden(texts)
        mask = batch["attention_mask"].unsqueeze(-1)
        summed = (hidden * mask).sum(dim=1)
        counts = mask.sum(dim=1).clamp(min=1)
        pooled = (summed / counts).numpy().astype(np.float64)
        norms = np.linalg.norm(pooled, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return pooled / norms

    def encode_tokens(self, text: str) -> tuple[list[str], np.ndarray]:
        batch, hidden = self._last_hidden([text])
        ids = batch["input_ids"][0]
        mask = batch["attention_mask"][0].bool()
        vectors = hidden[0][mask].numpy().astype(np.float64)
        tokens = self.tokenizer.convert_ids_to_tokens(ids[mask])
        keep = [
            i for i, tok in enumerate(tokens)
            if tok not in self.tokenizer.all_special_tokens
        ]
        if not keep:
            return [], np.zeros((0, self.dim))
        vectors = vectors[keep]
        norms = np.linalg.norm(vectors, axis=1, keepdims=True)
        norms[norms == 0.0] = 1.0
        return [tokens[i] for i in keep], vectors / norms


def build_encoder(config) -> Encoder:
    if config.encoder == "hash":
        return HashEncoder(dim=config.dim, seed=config.seed)
    if config.encoder == "transformer":
        return TransformerEncoder(config.model_name)
    raise ValueError(f"unknown encoder kind {config.encoder!r}")
