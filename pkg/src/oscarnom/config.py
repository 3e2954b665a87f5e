"""Pipeline configuration: one JSON (or TOML, on Python 3.11+) file plus
command-line overrides.

Relative paths resolve against the config file's directory. The config
hash covers only the semantic knobs (seed, chunking, backend identity,
classifier, variants), never paths, so artifacts stay relocatable and two
runs of the same experiment embed the same hash.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

from .embedding import BATCH_SIZE_LONG, BATCH_SIZE_TITLE, QUERY_PREFIX
from .errors import ValidationError
from .features import Variant

BACKEND_KINDS = ("mock", "http", "cache-only")


@dataclass
class Paths:
    corpus: str = "corpus.jsonl"
    awards: str = "awards.csv"
    dataset: str = "movie_o_label.jsonl"
    splits: str = "splits.json"
    caches: str = "caches"
    features: str = "features"
    models: str = "models"
    reports: str = "reports"

    def resolve(self, base: Path) -> "Paths":
        return Paths(**{k: str((base / v).resolve()) if not Path(v).is_absolute()
                        else v for k, v in self.__dict__.items()})


@dataclass
class BackendConfig:
    kind: str = "mock"
    url: str = ""
    dimension: int = 768
    prefix: str = QUERY_PREFIX
    batch_size: int = BATCH_SIZE_LONG
    title_batch_size: int = BATCH_SIZE_TITLE
    normalized_at_encode: bool = True


@dataclass
class ClassifierConfig:
    C: float = 1.0
    max_iter: int = 5000
    tol: float = 1e-4
    class_weight: str = "balanced"
    memory: int = 10


@dataclass
class PipelineConfig:
    seed: int = 0
    paths: Paths = field(default_factory=Paths)
    chunk_size: int = 400
    chunk_overlap: int = 80
    backend: BackendConfig = field(default_factory=BackendConfig)
    classifier: ClassifierConfig = field(default_factory=ClassifierConfig)
    variants: list[str] = field(default_factory=lambda: [v.value for v in Variant])
    transitions_file: str = ""

    def __post_init__(self):
        if self.backend.kind not in BACKEND_KINDS:
            raise ValidationError(
                f"backend kind {self.backend.kind!r} not in {BACKEND_KINDS}")
        if self.classifier.class_weight not in ("balanced", "none"):
            raise ValidationError(
                f"class_weight must be 'balanced' or 'none', "
                f"got {self.classifier.class_weight!r}")
        for v in self.variants:
            Variant.parse(v)

    def variant_list(self) -> list[Variant]:
        return [Variant.parse(v) for v in self.variants]

    def config_hash(self) -> str:
        semantic = {
            "seed": self.seed,
            "chunk_size": self.chunk_size,
            "chunk_overlap": self.chunk_overlap,
            "backend": {
                "kind": self.backend.kind,
                "dimension": self.backend.dimension,
                "prefix": self.backend.prefix,
                "normalized_at_encode": self.backend.normalized_at_encode,
            },
            "classifier": self.classifier.__dict__,
            "variants": sorted(self.variants),
        }
        canonical = json.dumps(semantic, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def _load_raw(path: Path) -> dict:
    if path.suffix.lower() == ".toml":
        try:
            import tomllib
        except ImportError as exc:
            raise ValidationError(
                "TOML configs need Python 3.11+; use a JSON config instead"
            ) from exc
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    with open(path, encoding="utf-8") as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValidationError(f"{path}: invalid config JSON: {exc}") from exc


def load_config(path: str | Path, overrides: dict | None = None) -> PipelineConfig:
    """Read a config file and apply flat CLI overrides on top."""
    path = Path(path)
    raw = _load_raw(path)
    raw = _merge(raw, overrides or {})

    known_paths = {k: str(v) for k, v in raw.get("paths", {}).items()}
    chunk = raw.get("chunking", {})
    try:
        cfg = PipelineConfig(
            seed=int(raw.get("seed", 0)),
            paths=Paths(**known_paths).resolve(path.parent.resolve()),
            chunk_size=int(chunk.get("size", 400)),
            chunk_overlap=int(chunk.get("overlap", 80)),
            backend=BackendConfig(**raw.get("backend", {})),
            classifier=ClassifierConfig(**raw.get("classifier", {})),
            variants=list(raw.get("variants", [v.value for v in Variant])),
            transitions_file=str(raw.get("transitions_file", "")),
        )
    except TypeError as exc:
        raise ValidationError(f"{path}: unknown config key: {exc}") from exc
    return cfg


def _merge(base: dict, overrides: dict) -> dict:
    out = dict(base)
    for key, value in overrides.items():
        if value is None:
            continue
        if isinstance(value, dict):
            out[key] = _merge(out.get(key, {}), value)
        else:
            out[key] = value
    return out
