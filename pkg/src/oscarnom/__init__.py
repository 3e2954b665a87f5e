"""Screenplay award-nomination prediction from chunked text embeddings."""

from .chunking import ChunkSet, chunk_count, chunk_stats, chunk_words
from .classifier import (WeightedLogisticRegression, compute_class_weights,
                         loss_and_gradient, sigmoid)
from .corpus import (AwardRecord, ScreenplayRecord, SplitAssignment,
                     assign_labels, clean_script, parse_movie_name,
                     stratified_split, strip_xml, token_stats)
from .embedding import (EncoderBackend, HttpEncoder, MockEncoder, encode_batch,
                        mock_encode)
from .features import (FieldVector, Variant, fuse_fields, max_pool, mean_pool,
                       pool_and_normalize)
from .metrics import (EvalReport, ThresholdScan, average_precision, f1_scores,
                      roc_auc, tune_threshold)
from .modelfile import FeatureLayout, NominationModel, load_model, save_model

__version__ = "0.1.0"

__all__ = [
    "AwardRecord",
    "ChunkSet",
    "EncoderBackend",
    "EvalReport",
    "FeatureLayout",
    "FieldVector",
    "HttpEncoder",
    "MockEncoder",
    "NominationModel",
    "ScreenplayRecord",
    "SplitAssignment",
    "ThresholdScan",
    "Variant",
    "WeightedLogisticRegression",
    "assign_labels",
    "average_precision",
    "chunk_count",
    "chunk_stats",
    "chunk_words",
    "clean_script",
    "compute_class_weights",
    "encode_batch",
    "f1_scores",
    "fuse_fields",
    "load_model",
    "loss_and_gradient",
    "max_pool",
    "mean_pool",
    "mock_encode",
    "parse_movie_name",
    "pool_and_normalize",
    "roc_auc",
    "save_model",
    "sigmoid",
    "stratified_split",
    "strip_xml",
    "token_stats",
    "tune_threshold",
]
