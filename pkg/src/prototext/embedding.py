"""Sentence embedding providers.

Three interchangeable backends share one small contract (`dim`, `embed`,
`embed_batch`):

* ReferenceEmbedder - a deterministic hashed n-gram random-projection
  embedder. It stands in for a frozen pretrained encoder so the whole
  pipeline can run hermetically and reproducibly.
* EmbeddingCache - exact-text lookup of precomputed vectors, persisted as
  JSON Lines.
* HttpEmbeddingClient - client for the embedding sidecar service.
"""

from __future__ import annotations

import json
import unicodedata
from dataclasses import dataclass

import numpy as np
import requests

from .errors import (
    CacheMissError,
    DimMismatchError,
    EmptyTextError,
    FormatError,
    IoError,
    NetworkError,
    ProtocolError,
)
from .rng import fnv1a64, uniforms


@dataclass(frozen=True)
class Token:
    text: str
    start: int  # character offset into the original string
    end: int    # exclusive

    def __str__(self) -> str:
        return self.text


def _is_punct(ch: str) -> bool:
    return unicodedata.category(ch).startswith("P")


def tokenize_with_spans(text: str) -> list[Token]:
    """Split on whitespace, trim punctuation off token edges, keep spans.

    Word-internal punctuation (apostrophes, hyphens) survives; tokens that
    are punctuation-only are dropped.
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        if text[i].isspace():
            i += 1
            continue
        j = i
        while j < n and not text[j].isspace():
            j += 1
        start, end = i, j
        while start < end and _is_punct(text[start]):
            start += 1
        while end > start and _is_punct(text[end - 1]):
            end -= 1
        if end > start:
            tokens.append(Token(text[start:end], start, end))
        i = j
    return tokens


def tokenize(text: str) -> list[str]:
    """Token strings only; see tokenize_with_spans for offsets."""
    return [t.text for t in tokenize_with_spans(text)]


@dataclass(frozen=True)
class ReferenceEmbedderConfig:
    dim: int = 64
    seed: int = 0
    use_bigrams: bool = True


class ReferenceEmbedder:
    """Deterministic embedder: sum of hashed per-feature random projections.

    Features are lowercased unigrams plus (optionally) adjacent bigrams.
    Each feature seeds a splitmix64 stream via FNV-1a, which emits `dim`
    pseudo-Gaussian values (sum of four uniforms, centered). The feature
    vectors are summed and the result L2-normalized. Same (config, text)
    always yields the identical vector.
    """

    def __init__(self, config: ReferenceEmbedderConfig | None = None, **kwargs):
        self.config = config if config is not None else ReferenceEmbedderConfig(**kwargs)
        if self.config.dim <= 0:
            raise ValueError("dim must be positive")
        self._feature_vectors: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.config.dim

    def _feature_vector(self, feature: str) -> np.ndarray:
        # memo writes are idempotent (same feature -> same vector), so
        # concurrent queries stay safe under the GIL
        vec = self._feature_vectors.get(feature)
        if vec is None:
            seed = fnv1a64(feature.encode("utf-8")) ^ self.config.seed
            u = uniforms(seed, 4 * self.config.dim)
            vec = u.reshape(self.config.dim, 4).sum(axis=1) - 2.0
            self._feature_vectors[feature] = vec
        return vec

    def embed(self, text: str) -> np.ndarray:
        tokens = [t.lower() for t in tokenize(text)]
        if not tokens:
            raise EmptyTextError(f"no tokens in text: {text!r}")
        features = list(tokens)
        if self.config.use_bigrams:
            features.extend(f"{a} {b}" for a, b in zip(tokens, tokens[1:]))
        total = np.zeros(self.config.dim)
        for feature in features:
            total = total + self._feature_vector(feature)
        norm = float(np.sqrt((total * total).sum()))
        if norm == 0.0:
            raise EmptyTextError(f"degenerate embedding for text: {text!r}")
        return total / norm

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return _batch_via_single(self, texts)


def embed_reference(text: str, config: ReferenceEmbedderConfig) -> np.ndarray:
    return ReferenceEmbedder(config).embed(text)


def _batch_via_single(provider, texts: list[str]) -> list[np.ndarray]:
    out = []
    for i, text in enumerate(texts):
        try:
            out.append(provider.embed(text))
        except Exception as exc:
            raise type(exc)(f"batch item {i}: {exc}") from exc
    return out


def embed_batch(provider, texts: list[str]) -> list[np.ndarray]:
    """Embed texts in order; errors are annotated with the offending index."""
    return provider.embed_batch(texts)


class EmbeddingCache:
    """Exact-text map to precomputed embeddings."""

    def __init__(self, dim: int):
        if dim <= 0:
            raise ValueError("dim must be positive")
        self._dim = dim
        self.entries: dict[str, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self._dim

    def add(self, text: str, vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float64)
        if vector.shape != (self._dim,):
            raise DimMismatchError(
                f"vector has length {vector.shape}, cache dim is {self._dim}"
            )
        self.entries[text] = vector

    def embed(self, text: str) -> np.ndarray:
        try:
            return self.entries[text]
        except KeyError:
            raise CacheMissError(f"text not in cache: {text!r}") from None

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        return _batch_via_single(self, texts)

    @classmethod
    def from_provider(cls, provider, texts: list[str]) -> "EmbeddingCache":
        cache = cls(provider.dim)
        vectors = provider.embed_batch(texts)
        for text, vec in zip(texts, vectors):
            cache.add(text, vec)
        return cache


def cache_store(cache: EmbeddingCache, path: str) -> None:
    """Write a cache as JSON Lines: {"text": ..., "embedding": [...]}."""
    if not cache.entries:
        raise ValueError("refusing to store an empty cache")
    try:
        with open(path, "w", encoding="utf-8") as fh:
            for text, vec in cache.entries.items():
                fh.write(json.dumps({"text": text, "embedding": vec.tolist()}) + "\n")
    except OSError as exc:
        raise IoError(str(exc)) from exc


def cache_load(path: str) -> EmbeddingCache:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise IoError(str(exc)) from exc
    cache = None
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            obj = json.loads(line)
            text = obj["text"]
            values = obj["embedding"]
        except (json.JSONDecodeError, KeyError, TypeError) as exc:
            raise FormatError(f"{path}:{lineno}: bad cache line: {exc}") from exc
        if not isinstance(values, list) or not values:
            raise FormatError(f"{path}:{lineno}: embedding must be a non-empty list")
        if cache is None:
            cache = EmbeddingCache(len(values))
        if len(values) != cache.dim:
            raise FormatError(
                f"{path}:{lineno}: dim {len(values)} != {cache.dim} from first line"
            )
        cache.add(text, np.array(values, dtype=np.float64))
    if cache is None:
        raise FormatError(f"{path}: cache file is empty")
    return cache


class HttpEmbeddingClient:
    """Client for the sidecar wire protocol.

    POST /embed with {"texts": [...]} returns
    {"embeddings": [[...], ...], "dim": int, "model": str};
    GET /health returns {"status": "ok", "dim": int}.
    """

    def __init__(self, endpoint: str, timeout: float = 30.0, expected_dim: int | None = None):
        self.endpoint = endpoint.rstrip("/")
        self.timeout = timeout
        self._dim = expected_dim

    @property
    def dim(self) -> int:
        if self._dim is None:
            try:
                resp = requests.get(f"{self.endpoint}/health", timeout=self.timeout)
            except requests.RequestException as exc:
                raise NetworkError(f"health check failed: {exc}") from exc
            try:
                body = resp.json()
                self._dim = int(body["dim"])
            except (ValueError, KeyError, TypeError) as exc:
                raise ProtocolError(f"malformed health response: {exc}") from exc
        return self._dim

    def embed(self, text: str) -> np.ndarray:
        return self.embed_batch([text])[0]

    def embed_batch(self, texts: list[str]) -> list[np.ndarray]:
        if not texts:
            return []
        for i, text in enumerate(texts):
            if not tokenize(text):
                raise EmptyTextError(f"batch item {i}: no tokens in text: {text!r}")
        try:
            resp = requests.post(
                f"{self.endpoint}/embed", json={"texts": texts}, timeout=self.timeout
            )
        except requests.RequestException as exc:
            raise NetworkError(f"embed request failed: {exc}") from exc
        if resp.status_code != 200:
            raise ProtocolError(f"embed returned HTTP {resp.status_code}: {resp.text[:200]}")
        try:
            body = resp.json()
            rows = body["embeddings"]
            dim = int(body["dim"])
        except (ValueError, KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed embed response: {exc}") from exc
        if not isinstance(rows, list) or len(rows) != len(texts):
            raise ProtocolError(
                f"expected {len(texts)} embeddings, got {len(rows) if isinstance(rows, list) else type(rows)}"
            )
        vectors = []
        for i, row in enumerate(rows):
            if not isinstance(row, list) or len(row) != dim:
                raise ProtocolError(f"embedding {i} has length {len(row)}, response dim is {dim}")
            vectors.append(np.array(row, dtype=np.float64))
        if self._dim is not None and dim != self._dim:
            raise DimMismatchError(f"service dim {dim} != expected {self._dim}")
        self._dim = dim
        return vectors


def http_embed(endpoint: str, texts: list[str], timeout: float = 30.0) -> list[np.ndarray]:
    """One-shot embedding through a sidecar endpoint."""
    return HttpEmbeddingClient(endpoint, timeout=timeout).embed_batch(texts)
