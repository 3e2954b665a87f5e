"""Mean/max pooling of chunk vectors, L2 normalization, field fusion.

A field is represented by the concatenation of the coordinate-wise mean and
maximum of its chunk embeddings, scaled to unit L2 norm. Per-variant feature
rows concatenate the per-field vectors in the fixed order script, summary,
title; the fused row is intentionally not re-normalized.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from enum import Enum
from typing import Mapping, Sequence

import numpy as np

from .errors import DimensionMismatch, EmptyInput, MissingField

FUSION_ORDER = ("script", "summary", "title")


class Variant(str, Enum):
    TITLE = "title"
    SCRIPT = "script"
    SUMMARY = "summary"
    SCRIPT_SUMMARY = "script+summary"
    SCRIPT_SUMMARY_TITLE = "script+summary+title"

    @property
    def fields(self) -> tuple[str, ...]:
        wanted = set(self.value.split("+"))
        return tuple(f for f in FUSION_ORDER if f in wanted)

    @property
    def code(self) -> int:
        return list(Variant).index(self)

    @classmethod
    def parse(cls, label: str) -> "Variant":
        try:
            return cls(label.strip().lower())
        except ValueError:
            raise MissingField(
                f"unknown variant {label!r}; expected one of "
                f"{[v.value for v in cls]}") from None


ALL_VARIANTS = tuple(Variant)


@dataclass
class FieldVector:
    field: str
    mean_part: np.ndarray
    max_part: np.ndarray
    normalized: np.ndarray
    n_chunks: int

    @property
    def dimension(self) -> int:
        return self.mean_part.shape[0]


def _as_matrix(vectors: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    mat = np.asarray(vectors, dtype=np.float64)
    if mat.ndim != 2 or mat.shape[0] == 0:
        raise EmptyInput("pooling requires at least one vector")
    return mat


def mean_pool(vectors: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Coordinate-wise arithmetic mean of the chunk vectors."""
    return _as_matrix(vectors).mean(axis=0)


def max_pool(vectors: Sequence[np.ndarray] | np.ndarray) -> np.ndarray:
    """Coordinate-wise maximum of the chunk vectors."""
    return _as_matrix(vectors).max(axis=0)


def pool_and_normalize(vectors: Sequence[np.ndarray] | np.ndarray,
                       field: str = "script") -> FieldVector:
    """[mean; max] of the chunk vectors, scaled to unit L2 norm.

    An all-zero concatenation comes back as zeros with a warning rather
    than NaN; real encoders never produce it.
    """
    mat = _as_matrix(vectors)
    mean = mat.mean(axis=0)
    mx = mat.max(axis=0)
    v = np.concatenate([mean, mx])
    norm = np.linalg.norm(v)
    if norm == 0.0:
        warnings.warn(f"all-zero pooled vector for field {field!r}; "
                      "leaving it unnormalized", RuntimeWarning, stacklevel=2)
        normalized = v
    else:
        normalized = v / norm
    return FieldVector(field=field, mean_part=mean, max_part=mx,
                       normalized=normalized, n_chunks=mat.shape[0])


def fuse_fields(field_vectors: Mapping[str, FieldVector],
                variant: Variant) -> np.ndarray:
    """Concatenate the variant's per-field vectors in fusion order."""
    dims = {fv.dimension for fv in field_vectors.values()}
    if len(dims) > 1:
        raise DimensionMismatch(f"field vectors disagree on dimension: {dims}")
    blocks = []
    for fname in variant.fields:
        if fname not in field_vectors:
            raise MissingField(
                f"variant {variant.value!r} needs field {fname!r}")
        blocks.append(field_vectors[fname].normalized)
    return np.concatenate(blocks)


def variant_dimension(variant: Variant, embed_dim: int) -> int:
    return 2 * embed_dim * len(variant.fields)
