"""Feature hashing and the linear sentence classifier."""

from .backend import active_backend, available_backends, get_backend
from .features import (
    TOKENIZER_VERSION,
    FeatureVector,
    SparseRows,
    featurize,
    featurize_rows,
    rows_from_vectors,
    tokenize,
)
from .model import (
    ModelParams,
    TrainConfig,
    load_model,
    predict,
    predict_rows,
    save_model,
    train,
    train_rows,
)

__all__ = [
    "TOKENIZER_VERSION",
    "FeatureVector",
    "SparseRows",
    "ModelParams",
    "TrainConfig",
    "active_backend",
    "available_backends",
    "featurize",
    "featurize_rows",
    "get_backend",
    "load_model",
    "predict",
    "predict_rows",
    "rows_from_vectors",
    "save_model",
    "tokenize",
    "train",
    "train_rows",
]
