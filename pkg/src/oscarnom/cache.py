"""On-disk vector cache: little-endian binary file plus JSON manifest.

Layout: 8-byte magic ``MOLEMB01``, u32 version, u32 dimension, u64 count,
then per record u16 id length + UTF-8 id, u8 field code, u32 chunk index,
dimension x f32 values; a CRC32 of all record bytes closes the file.
Vectors round-trip bit-exactly and the file is readable from any language.

The same container stores pooled feature matrices, with the field code
slot carrying the variant code instead.
"""

from __future__ import annotations

import json
import struct
import zlib
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import CorruptCache, ManifestMismatch, ValidationError

MAGIC = b"MOLEMB01"
VERSION = 1

FIELD_CODES = {"script": 0, "summary": 1, "title": 2}
FIELD_NAMES = {v: k for k, v in FIELD_CODES.items()}


class VectorCache:
    """In-memory view of one cache file: (id, code, chunk index) -> vector."""

    def __init__(self, dimension: int, manifest: dict | None = None):
        self.dimension = dimension
        self.manifest = manifest or {}
        self.entries: dict[tuple[str, int, int], np.ndarray] = {}

    def __len__(self) -> int:
        return len(self.entries)

    def __contains__(self, key: tuple[str, int, int]) -> bool:
        return key in self.entries

    def put(self, doc_id: str, code: int, chunk_index: int,
            vector: np.ndarray) -> None:
        vector = np.asarray(vector, dtype=np.float32)
        if vector.shape != (self.dimension,):
            raise ValidationError(
                f"vector shape {vector.shape} != ({self.dimension},)")
        self.entries[(doc_id, code, chunk_index)] = vector

    def chunk_counts(self) -> dict[tuple[str, int], int]:
        counts: dict[tuple[str, int], int] = {}
        for doc_id, code, _ in self.entries:
            counts[(doc_id, code)] = counts.get((doc_id, code), 0) + 1
        return counts

    def has_document(self, doc_id: str, code: int) -> bool:
        return (doc_id, code, 0) in self.entries

    def matrix(self, doc_id: str, code: int) -> np.ndarray:
        """Chunk vectors of one document field, ordered by chunk index."""
        rows = []
        i = 0
        while (doc_id, code, i) in self.entries:
            rows.append(self.entries[(doc_id, code, i)])
            i += 1
        if not rows:
            return np.empty((0, self.dimension), dtype=np.float32)
        return np.stack(rows)

    def validate_dense(self) -> None:
        """Chunk indices per (id, field) must run 0..n-1 without gaps."""
        index_sets: dict[tuple[str, int], set[int]] = {}
        for doc_id, code, idx in self.entries:
            index_sets.setdefault((doc_id, code), set()).add(idx)
        for (doc_id, code), idxs in index_sets.items():
            if idxs != set(range(len(idxs))):
                raise ValidationError(
                    f"cache entries for ({doc_id}, field {code}) are not dense: "
                    f"{sorted(idxs)}")


def write_cache(path: str | Path, cache: VectorCache,
                manifest: dict | None = None) -> None:
    """Serialize the cache (sorted keys, so output bytes are canonical)."""
    cache.validate_dense()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    manifest = dict(manifest if manifest is not None else cache.manifest)
    manifest.setdefault("magic", MAGIC.decode())
    manifest["dimension"] = cache.dimension
    manifest["count"] = len(cache.entries)

    body = bytearray()
    for (doc_id, code, idx) in sorted(cache.entries):
        vec = cache.entries[(doc_id, code, idx)]
        id_bytes = doc_id.encode("utf-8")
        body += struct.pack("<H", len(id_bytes))
        body += id_bytes
        body += struct.pack("<BI", code, idx)
        body += vec.astype("<f4").tobytes()

    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<IIQ", VERSION, cache.dimension, len(cache.entries)))
        fh.write(body)
        fh.write(struct.pack("<I", zlib.crc32(bytes(body)) & 0xFFFFFFFF))

    with open(manifest_path(path), "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, sort_keys=True, indent=2)
        fh.write("\n")


def manifest_path(cache_path: str | Path) -> Path:
    cache_path = Path(cache_path)
    return cache_path.with_name(cache_path.stem + ".manifest.json")


def read_cache(path: str | Path) -> VectorCache:
    path = Path(path)
    try:
        raw = path.read_bytes()
    except OSError as exc:
        raise CorruptCache(f"cannot read cache file {path}: {exc}") from exc

    if len(raw) < 8 + 16 + 4 or raw[:8] != MAGIC:
        raise CorruptCache(f"{path}: bad magic or truncated header")
    version, dim, count = struct.unpack_from("<IIQ", raw, 8)
    if version != VERSION:
        raise CorruptCache(f"{path}: unsupported cache version {version}")

    body = raw[24:-4]
    (crc_stored,) = struct.unpack_from("<I", raw, len(raw) - 4)
    if zlib.crc32(body) & 0xFFFFFFFF != crc_stored:
        raise CorruptCache(f"{path}: checksum mismatch")

    manifest = {}
    mpath = manifest_path(path)
    if mpath.exists():
        with open(mpath, encoding="utf-8") as fh:
            manifest = json.load(fh)

    cache = VectorCache(dimension=dim, manifest=manifest)
    offset = 0
    vec_bytes = 4 * dim
    for _ in range(count):
        try:
            (id_len,) = struct.unpack_from("<H", body, offset)
            offset += 2
            doc_id = body[offset:offset + id_len].decode("utf-8")
            offset += id_len
            code, idx = struct.unpack_from("<BI", body, offset)
            offset += 5
            vec = np.frombuffer(body, dtype="<f4", count=dim, offset=offset)
            if vec.size != dim:
                raise CorruptCache(f"{path}: truncated vector payload")
            offset += vec_bytes
        except (struct.error, UnicodeDecodeError) as exc:
            raise CorruptCache(f"{path}: truncated or malformed record") from exc
        cache.entries[(doc_id, code, idx)] = vec.copy()
    if offset != len(body):
        raise CorruptCache(f"{path}: {len(body) - offset} trailing bytes in body")
    return cache


def check_manifest(manifest: Mapping, *, chunk_size: int, chunk_overlap: int,
                   prefix: str | None = None) -> None:
    """Reject caches built with different chunking (or prefix) settings."""
    got = (manifest.get("chunk_size"), manifest.get("chunk_overlap"))
    if got != (chunk_size, chunk_overlap):
        raise ManifestMismatch(
            f"cache was built with chunk size/overlap {got}, "
            f"pipeline expects {(chunk_size, chunk_overlap)}")
    if prefix is not None and manifest.get("prefix") != prefix:
        raise ManifestMismatch(
            f"cache prefix {manifest.get('prefix')!r} != pipeline prefix {prefix!r}")
