"""End-to-end pipeline stages behind the CLI subcommands.

Every stage is idempotent: completed outputs carry the config hash (and,
for the dataset, input content hashes) and are skipped on rerun. Artifacts
never embed wall-clock state or absolute paths, so identical configs and
seeds reproduce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
import logging
from pathlib import Path

import numpy as np

from . import corpus as corpus_mod
from .cache import (FIELD_CODES, VectorCache, check_manifest, manifest_path,
                    read_cache, write_cache)
from .chunking import chunk_stats, chunk_words
from .classifier import WeightedLogisticRegression
from .config import PipelineConfig
from .corpus import (ScreenplayRecord, SplitAssignment, load_awards,
                     load_corpus_jsonl, load_dataset_jsonl, load_splits,
                     load_transition_patterns, prepare_record,
                     save_dataset_jsonl, save_splits, stratified_split)
from .embedding import HttpEncoder, MockEncoder, encode_batch
from .errors import (BackendUnavailable, ManifestMismatch, MissingField,
                     ValidationError)
from .features import FUSION_ORDER, Variant, fuse_fields, pool_and_normalize
from .metrics import Confusion, EvalReport, evaluate_scores, tune_threshold
from .modelfile import (FeatureLayout, NominationModel, load_model,
                        save_model)

logger = logging.getLogger(__name__)

EMBED_CHECKPOINT_DOCS = 64


def _audit(audit: list | None, event: str) -> None:
    if audit is not None:
        audit.append(event)


def _sha256_file(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for block in iter(lambda: fh.read(1 << 20), b""):
            h.update(block)
    return h.hexdigest()


def make_backend(config: PipelineConfig):
    kind = config.backend.kind
    if kind == "mock":
        return MockEncoder(dimension=config.backend.dimension)
    if kind == "http":
        if not config.backend.url:
            raise ValidationError("backend.kind is 'http' but no url is set")
        return HttpEncoder(config.backend.url,
                           dimension=config.backend.dimension or None)
    return None  # cache-only


# ---------------------------------------------------------------------------
# Dataset construction


def build_dataset(config: PipelineConfig, audit: list | None = None) -> dict:
    """Clean the corpus, join award labels, persist the dataset."""
    dataset_path = Path(config.paths.dataset)
    manifest_file = dataset_path.with_suffix(".manifest.json")
    corpus_path = Path(config.paths.corpus)
    awards_path = Path(config.paths.awards)
    if not corpus_path.exists():
        raise ValidationError(f"corpus file {corpus_path} does not exist")
    if not awards_path.exists():
        raise ValidationError(f"awards file {awards_path} does not exist")

    fingerprint = {
        "config_hash": config.config_hash(),
        "corpus_sha256": _sha256_file(corpus_path),
        "awards_sha256": _sha256_file(awards_path),
    }
    if dataset_path.exists() and manifest_file.exists():
        with open(manifest_file, encoding="utf-8") as fh:
            old = json.load(fh)
        if all(old.get(k) == v for k, v in fingerprint.items()):
            logger.info("dataset %s is up to date", dataset_path)
            return old

    patterns = load_transition_patterns(config.transitions_file or None)
    rows = load_corpus_jsonl(corpus_path)
    records = [prepare_record(row, patterns) for row in rows]
    awards = load_awards(awards_path)
    if not awards:
        logger.warning("award file %s has no records; all labels will be 0",
                       awards_path)
    corpus_mod.assign_labels(records, awards)

    save_dataset_jsonl(records, dataset_path)
    info = dict(fingerprint)
    info["n_records"] = len(records)
    info["n_positive"] = sum(r.nominated for r in records)
    info["n_winner"] = sum(r.winner for r in records)
    with open(manifest_file, "w", encoding="utf-8") as fh:
        json.dump(info, fh, sort_keys=True, indent=2)
        fh.write("\n")
    _audit(audit, "dataset_built")
    return info


def make_splits(config: PipelineConfig, audit: list | None = None) -> SplitAssignment:
    records = load_dataset_jsonl(config.paths.dataset)
    splits_path = Path(config.paths.splits)
    if splits_path.exists():
        split = load_splits(splits_path)
        if (split.seed == config.seed
                and len(split.train) + len(split.val) + len(split.test) == len(records)):
            logger.info("splits %s are up to date", splits_path)
            return split
    split = stratified_split([r.nominated for r in records], seed=config.seed)
    save_splits(split, splits_path)
    _audit(audit, "splits_created")
    return split


# ---------------------------------------------------------------------------
# Embedding


def _field_text(record: ScreenplayRecord, field: str) -> str:
    if field == "script":
        return record.script_clean
    return getattr(record, field)


def _cache_path(config: PipelineConfig, field: str) -> Path:
    return Path(config.paths.caches) / f"{field}.emb"


def _field_manifest(config: PipelineConfig, field: str, backend_name: str,
                    dimension: int) -> dict:
    return {
        "kind": "embeddings",
        "field": field,
        "backend": backend_name,
        "prefix": config.backend.prefix,
        "chunk_size": config.chunk_size,
        "chunk_overlap": config.chunk_overlap,
        "dimension": dimension,
        "normalized_at_encode": config.backend.normalized_at_encode,
        "config_hash": config.config_hash(),
    }


def _record_chunks(record: ScreenplayRecord, field: str,
                   config: PipelineConfig) -> list[str]:
    return chunk_words(_field_text(record, field), size=config.chunk_size,
                       overlap=config.chunk_overlap, field=field,
                       empty_chunk=(field == "title")).chunks


def dump_chunks(config: PipelineConfig, path: str | Path) -> int:
    """Debug dump: one JSON line per chunk of every record field."""
    records = load_dataset_jsonl(config.paths.dataset)
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with open(path, "w", encoding="utf-8") as fh:
        for rec in records:
            for field in FUSION_ORDER:
                cs = chunk_words(_field_text(rec, field),
                                 size=config.chunk_size,
                                 overlap=config.chunk_overlap, field=field,
                                 empty_chunk=(field == "title"))
                for idx, (start, text) in enumerate(zip(cs.starts, cs.chunks)):
                    fh.write(json.dumps(
                        {"imdb_id": rec.imdb_id, "field": field,
                         "chunk_index": idx, "start": start, "text": text},
                        ensure_ascii=False, sort_keys=True) + "\n")
                    count += 1
    return count


def embed_corpus(config: PipelineConfig, backend=None,
                 audit: list | None = None) -> dict:
    """Encode all dataset chunks into per-field caches; resumable.

    With a cache-only backend the caches are validated instead of filled.
    Returns per-field chunk statistics.
    """
    records = load_dataset_jsonl(config.paths.dataset)
    if backend is None:
        backend = make_backend(config)

    counts_by_field: dict[str, list[int]] = {}
    for field in FUSION_ORDER:
        path = _cache_path(config, field)
        chunk_lists = {r.imdb_id: _record_chunks(r, field, config)
                       for r in records}
        counts_by_field[field] = [len(c) for c in chunk_lists.values()]

        if path.exists():
            cache = read_cache(path)
            check_manifest(cache.manifest, chunk_size=config.chunk_size,
                           chunk_overlap=config.chunk_overlap,
                           prefix=config.backend.prefix)
            cache.validate_dense()
        elif backend is None:
            raise ValidationError(
                f"backend is cache-only but cache {path} does not exist")
        else:
            cache = VectorCache(dimension=backend.dimension)

        code = FIELD_CODES[field]
        pending = [r for r in records
                   if not cache.has_document(r.imdb_id, code)
                   and chunk_lists[r.imdb_id]]
        if backend is None:
            if pending:
                raise ValidationError(
                    f"cache {path} lacks entries for {len(pending)} documents "
                    f"(first: {pending[0].imdb_id})")
            _validate_counts(cache, chunk_lists, code, path)
            continue
        if not pending:
            _validate_counts(cache, chunk_lists, code, path)
            logger.info("cache %s is complete (%d entries)", path, len(cache))
            continue

        manifest = _field_manifest(config, field, backend.name, backend.dimension)
        if cache.manifest and cache.manifest.get("backend") != backend.name:
            raise ManifestMismatch(
                f"cache {path} was encoded by {cache.manifest.get('backend')!r}, "
                f"current backend is {backend.name!r}")
        batch_size = (config.backend.title_batch_size if field == "title"
                      else config.backend.batch_size)
        _encode_pending(cache, backend, pending, chunk_lists, code,
                        config.backend.prefix, batch_size, path, manifest)
        _validate_counts(cache, chunk_lists, code, path)
        write_cache(path, cache, manifest)
        logger.info("cache %s: %d entries", path, len(cache))

    _audit(audit, "embeddings_ready")
    return chunk_stats(counts_by_field)


def _validate_counts(cache: VectorCache, chunk_lists: dict[str, list[str]],
                     code: int, path: Path) -> None:
    actual = cache.chunk_counts()
    for imdb_id, chunks in chunk_lists.items():
        got = actual.get((imdb_id, code), 0)
        if got != len(chunks):
            raise ValidationError(
                f"cache {path}: document {imdb_id} has {got} chunks cached, "
                f"dataset chunking yields {len(chunks)}")


def _encode_pending(cache, backend, pending, chunk_lists, code, prefix,
                    batch_size, path, manifest) -> None:
    """Encode missing documents, checkpointing complete ones on failure."""
    flat: list[tuple[str, int, str]] = []
    for rec in pending:
        for idx, text in enumerate(chunk_lists[rec.imdb_id]):
            flat.append((rec.imdb_id, idx, text))

    done = 0
    try:
        for lo in range(0, len(flat), batch_size):
            batch = flat[lo:lo + batch_size]
            vectors = encode_batch(backend, [t for _, _, t in batch], prefix,
                                   batch_size=batch_size)
            for (imdb_id, idx, _), vec in zip(batch, vectors):
                cache.put(imdb_id, code, idx, vec)
            done = lo + len(batch)
    except BackendUnavailable:
        complete = {}
        for imdb_id, idx, _ in flat[:done]:
            complete.setdefault(imdb_id, 0)
            complete[imdb_id] += 1
        for imdb_id, n in list(complete.items()):
            if n != len(chunk_lists[imdb_id]):
                for i in range(n):
                    cache.entries.pop((imdb_id, code, i), None)
        write_cache(path, cache, manifest)
        logger.warning("backend failed; checkpointed %d entries to %s",
                       len(cache), path)
        raise


# ---------------------------------------------------------------------------
# Features


def open_caches(config: PipelineConfig, fields) -> dict[str, VectorCache]:
    caches = {}
    for field in fields:
        path = _cache_path(config, field)
        if not path.exists():
            raise ValidationError(f"embedding cache {path} does not exist; "
                                  "run the embed stage first")
        cache = read_cache(path)
        check_manifest(cache.manifest, chunk_size=config.chunk_size,
                       chunk_overlap=config.chunk_overlap,
                       prefix=config.backend.prefix)
        caches[field] = cache
    return caches


def featurize(records, caches: dict[str, VectorCache],
              variant: Variant) -> np.ndarray:
    """Pool and fuse cached chunk vectors into one row per record."""
    rows = []
    for rec in records:
        field_vectors = {}
        for field in variant.fields:
            mat = caches[field].matrix(rec.imdb_id, FIELD_CODES[field])
            if mat.shape[0] == 0:
                raise ValidationError(
                    f"no cached chunks for {rec.imdb_id} field {field!r}")
            field_vectors[field] = pool_and_normalize(
                mat.astype(np.float64), field)
        rows.append(fuse_fields(field_vectors, variant))
    return np.stack(rows)


def _variant_slug(variant: Variant) -> str:
    return variant.value.replace("+", "_")


def _features_path(config: PipelineConfig, variant: Variant) -> Path:
    return Path(config.paths.features) / f"{_variant_slug(variant)}.fmat"


def save_feature_matrix(config: PipelineConfig, variant: Variant,
                        records, rows: np.ndarray, embed_dim: int,
                        split_seed: int) -> None:
    cache = VectorCache(dimension=rows.shape[1])
    for rec, row in zip(records, rows):
        cache.put(rec.imdb_id, variant.code, 0, row.astype(np.float32))
    manifest = {
        "kind": "features",
        "variant": variant.value,
        "embed_dim": embed_dim,
        "dimension": int(rows.shape[1]),
        "row_count": int(rows.shape[0]),
        "split_seed": split_seed,
        "chunk_size": config.chunk_size,
        "chunk_overlap": config.chunk_overlap,
        "prefix": config.backend.prefix,
        "config_hash": config.config_hash(),
    }
    write_cache(_features_path(config, variant), cache, manifest)


def load_feature_matrix(config: PipelineConfig, variant: Variant, records):
    """Rows from the persisted feature matrix, or None if unusable."""
    path = _features_path(config, variant)
    if not path.exists():
        return None
    cache = read_cache(path)
    man = cache.manifest
    if (man.get("kind") != "features" or man.get("variant") != variant.value
            or man.get("config_hash") != config.config_hash()):
        return None
    try:
        rows = [cache.matrix(rec.imdb_id, variant.code)[0] for rec in records]
    except IndexError:
        return None
    return np.stack(rows).astype(np.float64)


# ---------------------------------------------------------------------------
# Train / evaluate / predict


def _model_path(config: PipelineConfig, variant: Variant) -> Path:
    return Path(config.paths.models) / f"{_variant_slug(variant)}.model.json"


def _report_path(config: PipelineConfig, variant: Variant) -> Path:
    return Path(config.paths.reports) / f"{_variant_slug(variant)}.report.json"


def train_variant(config: PipelineConfig, variant: Variant,
                  audit: list | None = None, force: bool = False) -> Path:
    """Fit on the train split, tune the threshold on validation, persist."""
    model_path = _model_path(config, variant)
    if model_path.exists() and not force:
        try:
            existing = load_model(model_path)
            if existing.training.get("config_hash") == config.config_hash():
                logger.info("model %s is up to date", model_path)
                return model_path
        except Exception:
            pass

    records = load_dataset_jsonl(config.paths.dataset)
    splits = load_splits(config.paths.splits)
    caches = open_caches(config, variant.fields)
    embed_dim = caches[variant.fields[0]].dimension

    rows = featurize(records, caches, variant)
    labels = np.array([r.nominated for r in records], dtype=np.int64)

    est = WeightedLogisticRegression(
        C=config.classifier.C, max_iter=config.classifier.max_iter,
        tol=config.classifier.tol,
        class_weight=(None if config.classifier.class_weight == "none"
                      else config.classifier.class_weight),
        memory=config.classifier.memory)
    est.fit(rows[splits.train], labels[splits.train])
    _audit(audit, "model_fitted")

    val_scores = est.predict_proba(rows[splits.val])[:, 1]
    scan = tune_threshold(val_scores, labels[splits.val])
    est.threshold_ = scan.tau_star
    _audit(audit, "threshold_tuned")

    model = NominationModel(
        estimator=est,
        layout=FeatureLayout(variant=variant, embed_dim=embed_dim),
        threshold=scan.tau_star,
        training={
            "split_seed": splits.seed,
            "n_iter": est.n_iter_,
            "final_objective": est.objective_,
            "converged": est.converged_,
            "val_f1_pos": scan.best_f1,
            "config_hash": config.config_hash(),
        })
    save_model(model, model_path)
    save_feature_matrix(config, variant, records, rows, embed_dim, splits.seed)
    logger.info("model %s: %d iterations, val F1+ %.3f, threshold %.2f",
                model_path, est.n_iter_, scan.best_f1, scan.tau_star)
    return model_path


def retune_threshold(config: PipelineConfig, variant: Variant,
                     audit: list | None = None):
    """Standalone validation-set threshold scan; updates the model file."""
    model_path = _model_path(config, variant)
    model = load_model(model_path)
    records = load_dataset_jsonl(config.paths.dataset)
    splits = load_splits(config.paths.splits)
    rows = load_feature_matrix(config, variant, records)
    if rows is None:
        rows = featurize(records, open_caches(config, variant.fields), variant)
    labels = np.array([r.nominated for r in records], dtype=np.int64)
    scores = model.predict_proba(rows[splits.val])
    scan = tune_threshold(scores, labels[splits.val])
    model.threshold = scan.tau_star
    model.estimator.threshold_ = scan.tau_star
    model.training["val_f1_pos"] = scan.best_f1
    save_model(model, model_path)
    _audit(audit, "threshold_tuned")
    return scan


def evaluate_variant(config: PipelineConfig, variant: Variant,
                     audit: list | None = None,
                     force: bool = False) -> tuple[Path, EvalReport]:
    """Score the test split at the model's tuned threshold."""
    report_path = _report_path(config, variant)
    model_path = _model_path(config, variant)
    model = load_model(model_path)
    _audit(audit, "threshold_loaded")

    if report_path.exists() and not force:
        with open(report_path, encoding="utf-8") as fh:
            existing = json.load(fh)
        if existing.get("provenance", {}).get("config_hash") == config.config_hash():
            logger.info("report %s is up to date", report_path)
            return report_path, _report_from_dict(existing)

    records = load_dataset_jsonl(config.paths.dataset)
    splits = load_splits(config.paths.splits)
    rows = load_feature_matrix(config, variant, records)
    if rows is None:
        rows = featurize(records, open_caches(config, variant.fields), variant)

    labels = np.array([r.nominated for r in records], dtype=np.int64)
    test_labels = labels[splits.test]
    _audit(audit, "test_labels_read")
    scores = model.predict_proba(rows[splits.test])

    provenance = {
        "config_hash": config.config_hash(),
        "model_checksum": _model_checksum(model_path),
        "split_file": {"name": Path(config.paths.splits).name,
                       "sha256": _sha256_file(Path(config.paths.splits))},
        "cache_manifests": _manifest_hashes(config, variant),
    }
    report = evaluate_scores(variant.value, scores, test_labels,
                             model.threshold, provenance)
    report_path.parent.mkdir(parents=True, exist_ok=True)
    with open(report_path, "w", encoding="utf-8") as fh:
        json.dump(report.to_dict(), fh, sort_keys=True, indent=2)
        fh.write("\n")
    _audit(audit, "report_written")
    return report_path, report


def _model_checksum(model_path: Path) -> str:
    with open(model_path, encoding="utf-8") as fh:
        return json.load(fh).get("checksum", "")


def _manifest_hashes(config: PipelineConfig, variant: Variant) -> dict:
    out = {}
    for field in variant.fields:
        mpath = manifest_path(_cache_path(config, field))
        if mpath.exists():
            out[field] = {"name": mpath.name, "sha256": _sha256_file(mpath)}
    return out


def _report_from_dict(obj: dict) -> EvalReport:
    m = obj["metrics"]
    return EvalReport(
        variant=obj["variant"], accuracy=m["accuracy"], roc_auc=m["roc_auc"],
        pr_auc=m["pr_auc"], f1_pos=m["f1_pos"], f1_neg=m["f1_neg"],
        macro_f1=m["macro_f1"], threshold=obj["threshold"],
        confusion=Confusion(**obj["confusion"]),
        roc_points=[tuple(p) for p in obj["roc_points"]],
        pr_points=[tuple(p) for p in obj["pr_points"]],
        provenance=obj.get("provenance", {}))


def predict_file(config: PipelineConfig, model_path: str | Path,
                 input_path: str | Path, backend=None) -> dict:
    """Score one screenplay JSON file with a trained model."""
    model = load_model(model_path)
    with open(input_path, encoding="utf-8") as fh:
        data = json.load(fh)

    if backend is None:
        backend = make_backend(config)
    if backend is None:
        raise BackendUnavailable(
            "prediction needs an encoding backend; cache-only cannot encode")
    if backend.dimension != model.layout.embed_dim:
        raise ManifestMismatch(
            f"backend dimension {backend.dimension} != model embed_dim "
            f"{model.layout.embed_dim}")

    texts = {}
    if "title" in model.layout.fields:
        if "title" in data:
            texts["title"] = str(data["title"])
        elif "movie_name" in data:
            texts["title"] = corpus_mod.parse_movie_name(data["movie_name"])[0]
    if "summary" in model.layout.fields and "summary" in data:
        texts["summary"] = str(data["summary"])
    if "script" in model.layout.fields and "script" in data:
        patterns = load_transition_patterns(config.transitions_file or None)
        texts["script"] = corpus_mod.clean_script(
            corpus_mod.strip_xml(str(data["script"])), patterns)
    missing = [f for f in model.layout.fields if f not in texts]
    if missing:
        raise MissingField(
            f"input lacks field(s) {missing} required by variant "
            f"{model.layout.variant.value!r}")

    field_vectors = {}
    for field in model.layout.fields:
        chunks = chunk_words(texts[field], size=config.chunk_size,
                             overlap=config.chunk_overlap, field=field,
                             empty_chunk=(field == "title")).chunks
        if not chunks:
            raise MissingField(f"field {field!r} is empty")
        batch_size = (config.backend.title_batch_size if field == "title"
                      else config.backend.batch_size)
        vectors = encode_batch(backend, chunks, config.backend.prefix,
                               batch_size=batch_size)
        field_vectors[field] = pool_and_normalize(vectors, field)

    row = fuse_fields(field_vectors, model.layout.variant)
    probability = float(model.predict_proba(row)[0])
    return {
        "variant": model.layout.variant.value,
        "probability": probability,
        "threshold": model.threshold,
        "label": int(probability >= model.threshold),
    }
