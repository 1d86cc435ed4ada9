"""Two-stage video moment retrieval: metrics, post-processing and models."""

from ._core import (
    Error,
    GalleryIndex,
    Stage2Config,
    Stage2Model,
    auc,
    ar_at_an,
    bm_mask,
    bm_sample,
    load_features,
    max_cos_similarity,
    run_grad_suite,
    soft_nms,
    synth_corpus,
    tiou,
)

__all__ = [
    "Error",
    "GalleryIndex",
    "Stage2Config",
    "Stage2Model",
    "auc",
    "ar_at_an",
    "bm_mask",
    "bm_sample",
    "load_features",
    "max_cos_similarity",
    "run_grad_suite",
    "soft_nms",
    "synth_corpus",
    "tiou",
]
