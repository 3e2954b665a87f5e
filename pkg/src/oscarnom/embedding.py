"""Encoder backends: text chunks in, fixed-dimension vectors out.

Every backend is deterministic (same prefixed text, same vector). The mock
backend needs no model or network: it hashes the prefixed text into a PRNG
seed, making all downstream tests reproducible bit-for-bit.
"""

from __future__ import annotations

import hashlib
from typing import Protocol, Sequence

import numpy as np
import requests

from .errors import BackendUnavailable, DimensionMismatch

QUERY_PREFIX = "query: "
BATCH_SIZE_LONG = 96
BATCH_SIZE_TITLE = 256


class EncoderBackend(Protocol):
    name: str
    dimension: int

    def encode(self, texts: Sequence[str], prefix: str) -> np.ndarray:
        """Return one vector per text, order preserved, shape (n, dimension)."""
        ...


def stable_text_seed(text: str) -> int:
    """64-bit platform-stable hash of the text; empty text maps to seed 0."""
    if text == "":
        return 0
    digest = hashlib.blake2b(text.encode("utf-8"), digest_size=8).digest()
    return int.from_bytes(digest, "little")


def mock_encode(text: str, d: int) -> np.ndarray:
    """Unit-norm vector drawn from a PRNG seeded by the text hash."""
    rng = np.random.default_rng(stable_text_seed(text))
    vec = rng.standard_normal(d)
    norm = np.linalg.norm(vec)
    return vec / norm if norm > 0 else vec


class MockEncoder:
    """Deterministic hash-seeded stand-in for a sentence encoder."""

    def __init__(self, dimension: int = 768):
        self.name = f"mock-{dimension}"
        self.dimension = dimension
        self.calls = 0

    def encode(self, texts: Sequence[str], prefix: str) -> np.ndarray:
        self.calls += 1
        out = np.empty((len(texts), self.dimension), dtype=np.float64)
        for i, text in enumerate(texts):
            out[i] = mock_encode(prefix + text, self.dimension)
        return out


class HttpEncoder:
    """Client for the sidecar encode protocol (POST /encode)."""

    def __init__(self, url: str, dimension: int | None = None,
                 timeout: float = 120.0):
        self.url = url.rstrip("/")
        self.name = f"http:{self.url}"
        self.timeout = timeout
        self.dimension = dimension or self._probe_dimension()

    def _probe_dimension(self) -> int:
        probe = self._post(["dimension probe"], QUERY_PREFIX)
        return int(probe["dimension"])

    def _post(self, texts: Sequence[str], prefix: str) -> dict:
        try:
            resp = requests.post(f"{self.url}/encode",
                                 json={"texts": list(texts), "prefix": prefix},
                                 timeout=self.timeout)
        except requests.RequestException as exc:
            raise BackendUnavailable(f"encoder at {self.url} unreachable: {exc}") from exc
        if resp.status_code != 200:
            raise BackendUnavailable(
                f"encoder at {self.url} returned HTTP {resp.status_code}")
        return resp.json()

    def encode(self, texts: Sequence[str], prefix: str) -> np.ndarray:
        payload = self._post(texts, prefix)
        vectors = np.asarray(payload["embeddings"], dtype=np.float64)
        if int(payload.get("dimension", self.dimension)) != self.dimension or (
                vectors.ndim != 2 or vectors.shape[1] != self.dimension):
            raise DimensionMismatch(
                f"backend returned dimension {vectors.shape}, expected {self.dimension}")
        return vectors


def encode_batch(backend: EncoderBackend, texts: Sequence[str], prefix: str,
                 batch_size: int = BATCH_SIZE_LONG) -> np.ndarray:
    """Encode texts through the backend in order, slicing into batches.

    The prefix is prepended exactly once per text (by the backend contract).
    """
    if batch_size < 1:
        raise ValueError(f"batch_size must be >= 1, got {batch_size}")
    parts = []
    for lo in range(0, len(texts), batch_size):
        batch = texts[lo:lo + batch_size]
        vectors = backend.encode(batch, prefix)
        vectors = np.asarray(vectors, dtype=np.float64)
        if vectors.shape != (len(batch), backend.dimension):
            raise DimensionMismatch(
                f"backend {backend.name} returned shape {vectors.shape}, "
                f"expected {(len(batch), backend.dimension)}")
        if not np.all(np.isfinite(vectors)):
            raise DimensionMismatch(
                f"backend {backend.name} returned non-finite values")
        parts.append(vectors)
    if not parts:
        return np.empty((0, backend.dimension), dtype=np.float64)
    return np.concatenate(parts, axis=0)
