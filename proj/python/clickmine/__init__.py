"""Clickstream operationalization for MOOC video logs.

Thin Python surface over the C++ core: symbol encoding, fuzzy behavioral
action scoring, the information processing index, and the end-to-end
pipeline.
"""

from ._core import (
    bin_ipi,
    category_weights,
    compute_ipi,
    default_config_json,
    encode_events,
    mine_ngrams,
    ngram_cosine,
    pattern_weight,
    run_pipeline,
    tokenize,
    two_sample_z,
    window_edit_distance,
)

__all__ = [
    "bin_ipi",
    "category_weights",
    "compute_ipi",
    "default_config_json",
    "encode_events",
    "mine_ngrams",
    "ngram_cosine",
    "pattern_weight",
    "run_pipeline",
    "tokenize",
    "two_sample_z",
    "window_edit_distance",
]
