"""Corpus chunking, exact cosine top-k index, and prompt context assembly.

The index is a full-scan exact search: at desk scale (thousands of chunks)
correctness and reproducibility beat approximate structures. Chunk boundaries
are whitespace-token based with a fixed overlap, so de-overlapped
concatenation reconstructs each document's token sequence exactly.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Optional, Sequence

import numpy as np

from .dataset import Caption
from .embeddings import EmbeddingProvider
from .errors import ConfigError, ProviderError

__all__ = [
    "Document",
    "Chunk",
    "ScoredChunk",
    "ContextBlock",
    "VectorIndex",
    "chunk_documents",
    "build_index",
    "query",
    "assemble_context",
    "load_corpus",
    "save_index",
    "load_index",
]

DEFAULT_MAX_CHUNK_TOKENS = 256
DEFAULT_OVERLAP = 32

INDEX_FORMAT_VERSION = 1


@dataclass(frozen=True)
class Document:
    doc_id: str
    source_name: str
    body: str

    def __post_init__(self):
        if not self.body:
            raise ValueError(f"document {self.doc_id!r} has an empty body")


@dataclass(frozen=True)
class Chunk:
    chunk_id: str
    doc_id: str
    offset: int  # token index of the chunk start within its document
    text: str
    token_count: int


@dataclass(frozen=True)
class ScoredChunk:
    chunk: Chunk
    score: float


@dataclass(frozen=True)
class ContextBlock:
    text: str
    cited: tuple[str, ...]


def chunk_documents(
    docs: Sequence[Document],
    max_chunk_tokens: int = DEFAULT_MAX_CHUNK_TOKENS,
    overlap: int = DEFAULT_OVERLAP,
) -> list[Chunk]:
    """Sliding-window chunking over whitespace tokens.

    Consecutive chunks of one document share exactly ``overlap`` tokens,
    except the final chunk which simply runs to the end.
    """
    if not 0 <= overlap < max_chunk_tokens:
        raise ConfigError(
            f"need 0 <= overlap < max_chunk_tokens, got overlap={overlap}, "
            f"max_chunk_tokens={max_chunk_tokens}"
        )
    stride = max_chunk_tokens - overlap
    chunks: list[Chunk] = []
    for doc in docs:
        tokens = doc.body.split()
        if not tokens:
            continue
        start = 0
        while True:
            end = min(start + max_chunk_tokens, len(tokens))
            chunks.append(
                Chunk(
                    chunk_id=f"{doc.doc_id}:{start:06d}",
                    doc_id=doc.doc_id,
                    offset=start,
                    text=" ".join(tokens[start:end]),
                    token_count=end - start,
                )
            )
            if end == len(tokens):
                break
            start += stride
    return chunks


class VectorIndex:
    """Immutable store of (chunk, vector) entries supporting exact top-k cosine."""

    def __init__(
        self,
        entries: Sequence[tuple[Chunk, np.ndarray]],
        dim: int,
        sources: Optional[Mapping[str, str]] = None,
    ):
        self._chunks: tuple[Chunk, ...] = tuple(chunk for chunk, _ in entries)
        self._dim = dim
        self._sources = dict(sources or {})
        if entries:
            matrix = np.stack([np.asarray(vec, dtype=np.float64) for _, vec in entries])
            if matrix.shape[1] != dim:
                raise ProviderError(
                    f"index vectors have dim {matrix.shape[1]}, expected {dim}"
                )
        else:
            matrix = np.zeros((0, dim))
        matrix.setflags(write=False)
        self._matrix = matrix
        self._norms = np.linalg.norm(matrix, axis=1)

    @property
    def dim(self) -> int:
        return self._dim

    @property
    def chunks(self) -> tuple[Chunk, ...]:
        return self._chunks

    @property
    def sources(self) -> dict[str, str]:
        return dict(self._sources)

    def entries(self) -> list[tuple[str, np.ndarray]]:
        return [(chunk.chunk_id, self._matrix[i]) for i, chunk in enumerate(self._chunks)]

    def __len__(self) -> int:
        return len(self._chunks)

    def scores_for(self, vector: np.ndarray) -> np.ndarray:
        """Cosine of ``vector`` against every entry; zero norms score 0."""
        qn = float(np.linalg.norm(vector))
        if qn == 0.0 or len(self) == 0:
            return np.zeros(len(self))
        raw = self._matrix @ np.asarray(vector, dtype=np.float64)
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(self._norms > 0.0, raw / (self._norms * qn), 0.0)


def build_index(
    chunks: Sequence[Chunk],
    provider: EmbeddingProvider,
    sources: Optional[Mapping[str, str]] = None,
) -> VectorIndex:
    """Embed every chunk text and freeze the result into a VectorIndex."""
    dim = provider.dim
    if dim <= 0:
        raise ProviderError(f"provider reports non-positive dim {dim}")
    entries = []
    for chunk in chunks:
        try:
            vec = provider.embed_text(chunk.text)
        except ProviderError as exc:
            raise ProviderError(f"embedding chunk {chunk.chunk_id}: {exc}") from exc
        if len(vec) != dim:
            raise ProviderError(
                f"chunk {chunk.chunk_id}: provider returned dim {len(vec)}, expected {dim}"
            )
        entries.append((chunk, vec))
    return VectorIndex(entries, dim, sources)


def query(
    index: VectorIndex,
    text: str,
    k: int,
    provider: EmbeddingProvider,
) -> list[ScoredChunk]:
    """Exact top-k by cosine; ties broken by chunk_id ascending."""
    if k < 0:
        raise ConfigError(f"k must be >= 0, got {k}")
    if k == 0 or len(index) == 0:
        return []
    vector = provider.embed_text(text)
    if len(vector) != index.dim:
        raise ProviderError(
            f"query vector dim {len(vector)} does not match index dim {index.dim}"
        )
    scores = index.scores_for(vector)
    order = sorted(range(len(index)), key=lambda i: (-scores[i], index.chunks[i].chunk_id))
    return [ScoredChunk(index.chunks[i], float(scores[i])) for i in order[:k]]


def assemble_context(
    caption: Caption,
    hits: Sequence[ScoredChunk],
    token_budget: int,
    sources: Optional[Mapping[str, str]] = None,
) -> ContextBlock:
    """Concatenate hits in rank order under a whole-chunk token budget.

    Each included chunk is prefixed with its source name (``sources`` maps
    doc_id to a display label; the doc_id itself is the fallback). A chunk is
    never split: assembly stops at the first chunk that does not fit. The
    caption itself is not part of the block; prompt building appends it.
    """
    if token_budget <= 0:
        raise ConfigError(f"token_budget must be > 0, got {token_budget}")
    del caption  # reserved for budget policies that account for the query text
    lines: list[str] = []
    cited: list[str] = []
    used = 0
    lookup = dict(sources or {})
    for hit in hits:
        label = lookup.get(hit.chunk.doc_id, hit.chunk.doc_id)
        block = f"[{label}] {hit.chunk.text}"
        cost = len(block.split())
        if used + cost > token_budget:
            break
        lines.append(block)
        cited.append(hit.chunk.chunk_id)
        used += cost
    return ContextBlock("\n".join(lines), tuple(cited))


def load_corpus(corpus_dir, manifest_path=None) -> list[Document]:
    """One Document per .txt/.md file in ``corpus_dir`` (sorted by filename).

    The manifest is a JSON object mapping filename to source label; files
    without an entry use their stem as the source name.
    """
    corpus_dir = Path(corpus_dir)
    manifest: dict[str, str] = {}
    if manifest_path is not None:
        with open(manifest_path, encoding="utf-8") as fh:
            manifest = json.load(fh)
    docs = []
    for path in sorted(corpus_dir.iterdir()):
        if path.suffix.lower() not in (".txt", ".md"):
            continue
        body = path.read_text(encoding="utf-8").strip()
        if not body:
            continue
        docs.append(
            Document(
                doc_id=path.stem,
                source_name=manifest.get(path.name, path.stem),
                body=body,
            )
        )
    return docs


def save_index(index: VectorIndex, path, provider_info: Optional[dict] = None) -> None:
    """Persist the index as a versioned JSON snapshot (written atomically)."""
    vectors = [vec for _, vec in index.entries()]
    payload = {
        "format_version": INDEX_FORMAT_VERSION,
        "dim": index.dim,
        "provider": provider_info or {},
        "sources": index.sources,
        "entries": [
            {
                "chunk_id": chunk.chunk_id,
                "doc_id": chunk.doc_id,
                "offset": chunk.offset,
                "text": chunk.text,
                "token_count": chunk.token_count,
                "vector": [float(x) for x in vectors[i]],
            }
            for i, chunk in enumerate(index.chunks)
        ],
    }
    text = json.dumps(payload, sort_keys=True, ensure_ascii=False)
    tmp = str(path) + ".tmp"
    with open(tmp, "w", encoding="utf-8") as fh:
        fh.write(text)
    os.replace(tmp, path)


def load_index(path) -> VectorIndex:
    with open(path, encoding="utf-8") as fh:
        payload = json.load(fh)
    version = payload.get("format_version")
    if version != INDEX_FORMAT_VERSION:
        raise ConfigError(f"unsupported index snapshot version {version!r}")
    entries = []
    for item in payload["entries"]:
        chunk = Chunk(
            chunk_id=item["chunk_id"],
            doc_id=item["doc_id"],
            offset=item["offset"],
            text=item["text"],
            token_count=item["token_count"],
        )
        entries.append((chunk, np.asarray(item["vector"], dtype=np.float64)))
    return VectorIndex(entries, payload["dim"], payload.get("sources") or {})
