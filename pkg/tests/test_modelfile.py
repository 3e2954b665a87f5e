import json

import numpy as np
import pytest

from oscarnom.classifier import WeightedLogisticRegression
from oscarnom.errors import CorruptModel, DimensionMismatch
from oscarnom.features import Variant
from oscarnom.modelfile import (FeatureLayout, NominationModel, load_model,
                                save_model)


def make_model(embed_dim=2, variant=Variant.TITLE, seed=0):
    rng = np.random.default_rng(seed)
    d = 2 * embed_dim * len(variant.fields)
    X = rng.standard_normal((40, d))
    y = (X[:, 0] > 0).astype(int)
    est = WeightedLogisticRegression().fit(X, y)
    est.threshold_ = 0.35
    return NominationModel(
        estimator=est,
        layout=FeatureLayout(variant=variant, embed_dim=embed_dim),
        threshold=0.35,
        training={"split_seed": 7, "n_iter": est.n_iter_,
                  "final_objective": est.objective_,
                  "converged": est.converged_, "config_hash": "abc"}), X


class TestRoundTrip:
    def test_predictions_bitwise_identical(self, tmp_path):
        model, X = make_model()
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        assert np.array_equal(loaded.predict_proba(X), model.predict_proba(X))
        assert np.array_equal(loaded.predict_label(X), model.predict_label(X))

    def test_metadata_preserved(self, tmp_path):
        model, _ = make_model()
        path = tmp_path / "m.json"
        save_model(model, path)
        loaded = load_model(path)
        assert loaded.threshold == 0.35
        assert loaded.layout.variant is Variant.TITLE
        assert loaded.layout.embed_dim == 2
        assert loaded.training["split_seed"] == 7
        assert loaded.estimator.C == model.estimator.C
        assert loaded.estimator.class_weight == model.estimator.class_weight

    def test_save_is_canonical(self, tmp_path):
        model, _ = make_model()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_model(model, a)
        save_model(model, b)
        assert a.read_bytes() == b.read_bytes()

    def test_double_roundtrip_stable(self, tmp_path):
        model, _ = make_model()
        a, b = tmp_path / "a.json", tmp_path / "b.json"
        save_model(model, a)
        save_model(load_model(a), b)
        assert a.read_bytes() == b.read_bytes()


class TestValidation:
    def test_checksum_detects_tampering(self, tmp_path):
        model, _ = make_model()
        path = tmp_path / "m.json"
        save_model(model, path)
        payload = json.loads(path.read_text())
        payload["threshold"] = 0.99
        path.write_text(json.dumps(payload))
        with pytest.raises(CorruptModel):
            load_model(path)

    def test_wrong_format_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text(json.dumps({"format": "something-else"}))
        with pytest.raises(CorruptModel):
            load_model(path)

    def test_garbage_rejected(self, tmp_path):
        path = tmp_path / "m.json"
        path.write_text("not json at all")
        with pytest.raises(CorruptModel):
            load_model(path)

    def test_row_dimension_checked(self, tmp_path):
        model, _ = make_model()
        with pytest.raises(DimensionMismatch):
            model.predict_proba(np.zeros((1, 3)))


class TestLayout:
    def test_dimensions(self):
        layout = FeatureLayout(variant=Variant.SCRIPT_SUMMARY_TITLE,
                               embed_dim=768)
        assert layout.dimension == 4608
        assert layout.fields == ("script", "summary", "title")
        d = layout.to_dict()
        assert d["variant"] == "script+summary+title"
        assert d["dimension"] == 4608
