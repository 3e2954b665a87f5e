import json
from pathlib import Path

import numpy as np
import pytest

from oscarnom import pipeline, synth
from oscarnom.cache import read_cache
from oscarnom.chunking import chunk_count
from oscarnom.config import BackendConfig, Paths, PipelineConfig
from oscarnom.embedding import MockEncoder, mock_encode
from oscarnom.errors import (BackendUnavailable, ManifestMismatch,
                             MissingField, ValidationError)
from oscarnom.features import Variant


def make_config(base: Path, n_records=30, seed=5, mode="signal", dimension=16,
                variants=("script+summary+title",), corpus_seed=2) -> PipelineConfig:
    synth.write_synthetic_corpus(base / "data", n_records, seed=corpus_seed,
                                 mode=mode)
    return PipelineConfig(
        seed=seed,
        paths=Paths(
            corpus=str(base / "data/corpus.jsonl"),
            awards=str(base / "data/awards.json"),
            dataset=str(base / "out/dataset.jsonl"),
            splits=str(base / "out/splits.json"),
            caches=str(base / "out/caches"),
            features=str(base / "out/features"),
            models=str(base / "out/models"),
            reports=str(base / "out/reports"),
        ),
        backend=BackendConfig(kind="mock", dimension=dimension),
        variants=list(variants),
    )


def run_all(cfg, variant=Variant.SCRIPT_SUMMARY_TITLE, audit=None):
    pipeline.build_dataset(cfg, audit)
    pipeline.make_splits(cfg, audit)
    pipeline.embed_corpus(cfg, audit=audit)
    pipeline.train_variant(cfg, variant, audit)
    return pipeline.evaluate_variant(cfg, variant, audit)


class TestEmbedStage:
    def test_cache_entry_count_matches_chunker(self, tmp_path):
        cfg = make_config(tmp_path, n_records=3)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        pipeline.embed_corpus(cfg)
        from oscarnom.corpus import load_dataset_jsonl
        records = load_dataset_jsonl(cfg.paths.dataset)
        expected = sum(chunk_count(len(r.script_clean.split())) for r in records)
        cache = read_cache(Path(cfg.paths.caches) / "script.emb")
        assert len(cache) == expected

    def test_rerun_makes_zero_backend_calls(self, tmp_path):
        cfg = make_config(tmp_path)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        first = MockEncoder(dimension=16)
        pipeline.embed_corpus(cfg, backend=first)
        assert first.calls > 0
        second = MockEncoder(dimension=16)
        pipeline.embed_corpus(cfg, backend=second)
        assert second.calls == 0

    def test_partial_cache_resumes(self, tmp_path):
        cfg = make_config(tmp_path, n_records=10)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        pipeline.embed_corpus(cfg)
        # drop one document's title entry and rewrite the cache
        from oscarnom.cache import write_cache
        path = Path(cfg.paths.caches) / "title.emb"
        cache = read_cache(path)
        victim = sorted({k[0] for k in cache.entries})[0]
        del cache.entries[(victim, 2, 0)]
        write_cache(path, cache, cache.manifest)
        backend = MockEncoder(dimension=16)
        pipeline.embed_corpus(cfg, backend=backend)
        assert backend.calls == 1  # only the missing document re-encoded
        assert (victim, 2, 0) in read_cache(path).entries

    def test_manifest_mismatch_on_chunk_params(self, tmp_path):
        cfg = make_config(tmp_path, n_records=5)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        pipeline.embed_corpus(cfg)
        altered = make_config(tmp_path, n_records=5)
        altered.chunk_size = 300
        altered.chunk_overlap = 50
        with pytest.raises(ManifestMismatch):
            pipeline.embed_corpus(altered)

    def test_backend_failure_checkpoints_progress(self, tmp_path):
        cfg = make_config(tmp_path, n_records=12)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)

        class FlakyBackend:
            name = "mock-16"
            dimension = 16

            def __init__(self):
                self.calls = 0

            def encode(self, texts, prefix):
                self.calls += 1
                if self.calls > 2:
                    raise BackendUnavailable("boom")
                return np.stack([mock_encode(prefix + t, 16) for t in texts])

        cfg.backend.batch_size = 4
        with pytest.raises(BackendUnavailable):
            pipeline.embed_corpus(cfg, backend=FlakyBackend())
        cache = read_cache(Path(cfg.paths.caches) / "script.emb")
        assert 0 < len(cache) < 12 * 2  # partial progress retained
        cache.validate_dense()
        # a healthy rerun completes from the checkpoint
        pipeline.embed_corpus(cfg, backend=MockEncoder(dimension=16))

    def test_cache_only_requires_complete_caches(self, tmp_path):
        cfg = make_config(tmp_path, n_records=4)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        cfg.backend.kind = "cache-only"
        with pytest.raises(ValidationError):
            pipeline.embed_corpus(cfg)

    def test_cache_only_validates_existing(self, tmp_path):
        cfg = make_config(tmp_path, n_records=4)
        pipeline.build_dataset(cfg)
        pipeline.make_splits(cfg)
        pipeline.embed_corpus(cfg)
        cfg.backend.kind = "cache-only"
        stats = pipeline.embed_corpus(cfg)
        assert stats["title"]["docs"] == 4


class TestTrainEvaluate:
    def test_full_run_produces_report(self, tmp_path):
        cfg = make_config(tmp_path, n_records=40)
        report_path, report = run_all(cfg)
        assert report_path.exists()
        assert 0.0 <= report.roc_auc <= 1.0
        payload = json.loads(report_path.read_text())
        assert payload["variant"] == "script+summary+title"
        assert payload["provenance"]["model_checksum"]
        assert payload["provenance"]["split_file"]["sha256"]

    def test_threshold_tuned_before_test_labels_read(self, tmp_path):
        cfg = make_config(tmp_path, n_records=40)
        audit: list = []
        run_all(cfg, audit=audit)
        assert "threshold_tuned" in audit and "test_labels_read" in audit
        assert audit.index("threshold_tuned") < audit.index("test_labels_read")

    def test_train_skips_when_up_to_date(self, tmp_path, caplog):
        cfg = make_config(tmp_path, n_records=30)
        run_all(cfg)
        model_path = pipeline.train_variant(cfg, Variant.SCRIPT_SUMMARY_TITLE)
        before = model_path.read_bytes()
        pipeline.train_variant(cfg, Variant.SCRIPT_SUMMARY_TITLE)
        assert model_path.read_bytes() == before

    def test_feature_matrix_reused_by_evaluate(self, tmp_path):
        cfg = make_config(tmp_path, n_records=30)
        run_all(cfg)
        from oscarnom.corpus import load_dataset_jsonl
        records = load_dataset_jsonl(cfg.paths.dataset)
        rows = pipeline.load_feature_matrix(cfg, Variant.SCRIPT_SUMMARY_TITLE,
                                            records)
        assert rows is not None
        assert rows.shape == (30, 2 * 16 * 3)

    def test_retune_threshold_standalone(self, tmp_path):
        cfg = make_config(tmp_path, n_records=40)
        run_all(cfg)
        scan = pipeline.retune_threshold(cfg, Variant.SCRIPT_SUMMARY_TITLE)
        from oscarnom.modelfile import load_model
        model = load_model(pipeline._model_path(cfg, Variant.SCRIPT_SUMMARY_TITLE))
        assert model.threshold == scan.tau_star

    def test_signal_corpus_is_separable(self, tmp_path):
        cfg = make_config(tmp_path, n_records=60, mode="signal")
        _, report = run_all(cfg)
        assert report.roc_auc >= 0.9


class TestDeterminism:
    def test_two_runs_bitwise_identical(self, tmp_path):
        outputs = []
        for sub in ("run_a", "run_b"):
            base = tmp_path / sub
            cfg = make_config(base, n_records=25, seed=9, corpus_seed=4)
            run_all(cfg)
            model = (Path(cfg.paths.models)
                     / "script_summary_title.model.json").read_bytes()
            report = (Path(cfg.paths.reports)
                      / "script_summary_title.report.json").read_bytes()
            outputs.append((model, report))
        assert outputs[0][0] == outputs[1][0]
        assert outputs[0][1] == outputs[1][1]


class TestPredict:
    def _trained(self, tmp_path, variant=Variant.SCRIPT_SUMMARY_TITLE):
        cfg = make_config(tmp_path, n_records=30)
        run_all(cfg, variant)
        return cfg, pipeline._model_path(cfg, variant)

    def test_self_consistency_on_training_record(self, tmp_path):
        cfg, model_path = self._trained(tmp_path)
        with open(cfg.paths.corpus, encoding="utf-8") as fh:
            row = json.loads(fh.readline())
        sp = tmp_path / "one.json"
        sp.write_text(json.dumps(row))
        result = pipeline.predict_file(cfg, model_path, sp)
        assert 0.0 < result["probability"] < 1.0
        assert result["label"] == int(result["probability"] >= result["threshold"])
        assert result["variant"] == "script+summary+title"

    def test_missing_field_rejected(self, tmp_path):
        cfg, model_path = self._trained(tmp_path)
        sp = tmp_path / "missing.json"
        sp.write_text(json.dumps({"title": "A Film", "script": "<a>x</a>"}))
        with pytest.raises(MissingField):
            pipeline.predict_file(cfg, model_path, sp)

    def test_cache_only_cannot_predict(self, tmp_path):
        cfg, model_path = self._trained(tmp_path)
        cfg.backend.kind = "cache-only"
        sp = tmp_path / "one.json"
        sp.write_text(json.dumps({"title": "A", "summary": "b", "script": "c"}))
        with pytest.raises(BackendUnavailable):
            pipeline.predict_file(cfg, model_path, sp)
