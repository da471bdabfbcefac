"""Python bindings for the multimodal fake-news detection kit."""

from ._core import (
    FAKE,
    REAL,
    CheckpointError,
    ConfigError,
    ManifestError,
    MmfndError,
    ShapeError,
    binary_metrics,
    clean_text,
    encode_text,
    f1_score,
    run_cli,
    split_ids,
    stub_vector,
    train_size,
    write_synthetic_corpus,
)

__all__ = [
    "FAKE",
    "REAL",
    "CheckpointError",
    "ConfigError",
    "ManifestError",
    "MmfndError",
    "ShapeError",
    "binary_metrics",
    "clean_text",
    "encode_text",
    "f1_score",
    "run_cli",
    "split_ids",
    "stub_vector",
    "train_size",
    "write_synthetic_corpus",
]
