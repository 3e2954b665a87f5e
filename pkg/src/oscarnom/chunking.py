"""Overlapping word-window chunking of field texts.

Words are maximal runs of non-whitespace; chunk starts advance by
``size - overlap`` while they stay below the word count, so a trailing
short chunk is always emitted. Chunks are rejoined with single spaces.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .errors import BadParams

DEFAULT_CHUNK_SIZE = 400
DEFAULT_CHUNK_OVERLAP = 80


@dataclass
class ChunkSet:
    field: str
    chunks: list[str] = field(default_factory=list)
    starts: list[int] = field(default_factory=list)
    size: int = DEFAULT_CHUNK_SIZE
    overlap: int = DEFAULT_CHUNK_OVERLAP

    def __len__(self) -> int:
        return len(self.chunks)


def chunk_words(text: str, size: int = DEFAULT_CHUNK_SIZE,
                overlap: int = DEFAULT_CHUNK_OVERLAP,
                field: str = "script", empty_chunk: bool = False) -> ChunkSet:
    """Split ``text`` into overlapping word windows.

    Starts are 0, stride, 2*stride, ... while start < word count,
    stride = size - overlap. Empty text yields one empty chunk when
    ``empty_chunk`` is set (the title convention) and none otherwise.
    """
    if size <= 0 or overlap < 0 or overlap >= size:
        raise BadParams(f"need 0 <= overlap < size, got size={size} overlap={overlap}")
    words = text.split()
    stride = size - overlap
    cs = ChunkSet(field=field, size=size, overlap=overlap)
    if not words:
        if empty_chunk:
            cs.chunks.append("")
            cs.starts.append(0)
        return cs
    start = 0
    while start < len(words):
        cs.starts.append(start)
        cs.chunks.append(" ".join(words[start:start + size]))
        start += stride
    return cs


def chunk_count(word_count: int, size: int = DEFAULT_CHUNK_SIZE,
                overlap: int = DEFAULT_CHUNK_OVERLAP) -> int:
    """Number of chunks chunk_words would emit for a non-empty text."""
    if size <= 0 or overlap < 0 or overlap >= size:
        raise BadParams(f"need 0 <= overlap < size, got size={size} overlap={overlap}")
    if word_count <= 0:
        return 0
    stride = size - overlap
    return 1 + (word_count - 1) // stride


def chunk_stats(chunk_counts_by_field: dict[str, list[int]]) -> dict:
    """Per-field average (one decimal), max and document count."""
    out = {}
    for fname, counts in chunk_counts_by_field.items():
        n = len(counts)
        out[fname] = {
            "avg_chunks": round(sum(counts) / n, 1) if n else 0.0,
            "max_chunks": max(counts) if counts else 0,
            "docs": n,
        }
    return out
