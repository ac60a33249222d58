"""Python bindings for the fauxcheck image-claim verification library."""

from ._fauxcheck import (
    ConfigError,
    DataError,
    FauxcheckError,
    LinearModel,
    ServiceError,
    accuracy,
    average_precision,
    compute_ela,
    cosine,
    load_corpus,
    registrable_domain,
    render_report,
    run,
    smoothed_average,
    softmax_confidence,
    tfidf,
    tokenize,
    train_linear_svm,
    validate_corpus,
)

__all__ = [
    "ConfigError",
    "DataError",
    "FauxcheckError",
    "LinearModel",
    "ServiceError",
    "accuracy",
    "average_precision",
    "compute_ela",
    "cosine",
    "load_corpus",
    "registrable_domain",
    "render_report",
    "run",
    "smoothed_average",
    "softmax_confidence",
    "tfidf",
    "tokenize",
    "train_linear_svm",
    "validate_corpus",
]
