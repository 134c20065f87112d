"""Multinomial logistic regression over hashed n-gram features.

Training is plain mini-batch gradient descent on the softmax
cross-entropy with L2 regularization, driven by a seeded PCG64 shuffle.
Given the same dataset, config and backend, training is bit-reproducible;
the active backend is recorded in the model metadata.
"""

from __future__ import annotations

import hashlib
import json
import os
import tempfile
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from ..corpus import LABELS, Label
from ..errors import (
    CorruptFile,
    DimensionMismatch,
    EmptyDataset,
    NonFiniteLoss,
    VersionMismatch,
)
from .backend import active_backend
from .features import TOKENIZER_VERSION, FeatureVector, SparseRows, rows_from_vectors

N_CLASSES = len(LABELS)

_MAGIC = b"RCWM"
_VERSION = 1


@dataclass
class TrainConfig:
    epochs: int = 5
    learning_rate: float = 0.1
    batch_size: int = 64
    seed: int = 0
    dim: int = 2 ** 18
    l2: float = 1e-5

    def validate(self) -> None:
        for name in ("epochs", "learning_rate", "batch_size", "dim", "l2"):
            if getattr(self, name) <= 0:
                raise ValueError(f"TrainConfig.{name} must be positive")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, raw: dict) -> "TrainConfig":
        return cls(**{k: raw[k] for k in asdict(cls()) if k in raw})


@dataclass
class ModelParams:
    weights: np.ndarray  # (n_classes, dim)
    bias: np.ndarray  # (n_classes,)
    metadata: dict = field(default_factory=dict)

    @property
    def dim(self) -> int:
        return self.weights.shape[1]


def train(dataset: Sequence[tuple[FeatureVector, Label]], cfg: TrainConfig) -> ModelParams:
    """Train on (feature vector, label) pairs. See train_rows."""
    if not dataset:
        raise EmptyDataset("training requires at least one example")
    for fv, _ in dataset:
        if fv.dim != cfg.dim:
            raise DimensionMismatch(f"feature dim {fv.dim} != config dim {cfg.dim}")
    rows = rows_from_vectors([fv for fv, _ in dataset], cfg.dim)
    y = np.asarray([label.ordinal for _, label in dataset], dtype=np.int64)
    return train_rows(rows, y, cfg)


def train_rows(rows: SparseRows, labels: np.ndarray, cfg: TrainConfig) -> ModelParams:
    """Train on a prebuilt CSR feature matrix and ordinal label array."""
    cfg.validate()
    n = rows.n_rows
    if n == 0:
        raise EmptyDataset("training requires at least one example")
    if rows.dim != cfg.dim:
        raise DimensionMismatch(f"feature dim {rows.dim} != config dim {cfg.dim}")
    kernels = active_backend()
    weights = np.zeros((N_CLASSES, cfg.dim), dtype=np.float64)
    bias = np.zeros(N_CLASSES, dtype=np.float64)
    scale = 1.0
    rng = np.random.default_rng(cfg.seed % 2 ** 64)
    labels = np.ascontiguousarray(labels, dtype=np.int64)
    epoch_losses: list[float] = []
    for epoch in range(cfg.epochs):
        order = rng.permutation(n).astype(np.int64)
        scale, loss = kernels.sgd_epoch(
            rows.indptr, rows.indices, rows.data, labels, order,
            weights, bias, scale, cfg.learning_rate, cfg.l2, cfg.batch_size,
        )
        if not np.isfinite(loss):
            raise NonFiniteLoss(f"epoch {epoch}: mean loss {loss} (lr={cfg.learning_rate})")
        epoch_losses.append(float(loss))
    weights *= scale
    if not np.isfinite(weights).all() or not np.isfinite(bias).all():
        raise NonFiniteLoss("non-finite parameters after training")
    metadata = {
        **cfg.to_dict(),
        "tokenizer": TOKENIZER_VERSION,
        "backend": kernels.BACKEND_NAME,
        "n_train": n,
        "epoch_losses": epoch_losses,
    }
    return ModelParams(weights=weights, bias=bias, metadata=metadata)


def _softmax(scores: np.ndarray) -> np.ndarray:
    shifted = scores - scores.max(axis=-1, keepdims=True)
    ex = np.exp(shifted)
    return ex / ex.sum(axis=-1, keepdims=True)


def predict(model: ModelParams, fv: FeatureVector) -> tuple[Label, np.ndarray]:
    """Label plus the full probability vector; ties break to the lowest
    label ordinal (argmax returns the first maximum)."""
    if fv.dim != model.dim:
        raise DimensionMismatch(f"feature dim {fv.dim} != model dim {model.dim}")
    scores = model.bias.copy()
    if len(fv.indices):
        scores += model.weights[:, fv.indices] @ fv.values
    probs = _softmax(scores)
    return LABELS[int(np.argmax(probs))], probs


def predict_rows(model: ModelParams, rows: SparseRows) -> tuple[np.ndarray, np.ndarray]:
    """Batch prediction: (ordinal array, probability matrix)."""
    if rows.dim != model.dim:
        raise DimensionMismatch(f"feature dim {rows.dim} != model dim {model.dim}")
    scores = rows.to_scipy() @ model.weights.T + model.bias
    probs = _softmax(scores)
    return np.argmax(probs, axis=1), probs


def save_model(model: ModelParams, path: Path) -> None:
    """Versioned binary: magic, version, JSON header, weights, bias, SHA-256."""
    header = json.dumps(
        {"dim": model.dim, "n_classes": N_CLASSES, "metadata": model.metadata},
        sort_keys=True,
    ).encode("utf-8")
    blob = bytearray()
    blob += _MAGIC
    blob += _VERSION.to_bytes(4, "little")
    blob += len(header).to_bytes(4, "little")
    blob += header
    blob += np.ascontiguousarray(model.weights, dtype="<f8").tobytes()
    blob += np.ascontiguousarray(model.bias, dtype="<f8").tobytes()
    blob += hashlib.sha256(blob).digest()
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "wb") as fh:
            fh.write(blob)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def load_model(path: Path) -> ModelParams:
    blob = Path(path).read_bytes()
    if len(blob) < 12 or blob[:4] != _MAGIC:
        raise VersionMismatch(f"{path}: not a model file (bad magic)")
    version = int.from_bytes(blob[4:8], "little")
    if version != _VERSION:
        raise VersionMismatch(f"{path}: unsupported model version {version}")
    if len(blob) < 44 or hashlib.sha256(blob[:-32]).digest() != blob[-32:]:
        raise CorruptFile(f"{path}: checksum mismatch (truncated or corrupted)")
    header_len = int.from_bytes(blob[8:12], "little")
    try:
        header = json.loads(blob[12:12 + header_len].decode("utf-8"))
        dim = int(header["dim"])
        n_classes = int(header["n_classes"])
        body = blob[12 + header_len:-32]
        expected = (n_classes * dim + n_classes) * 8
        if len(body) != expected:
            raise CorruptFile(f"{path}: payload length {len(body)} != {expected}")
        weights = np.frombuffer(body[: n_classes * dim * 8], dtype="<f8").reshape(n_classes, dim).copy()
        bias = np.frombuffer(body[n_classes * dim * 8:], dtype="<f8").copy()
    except (KeyError, ValueError, json.JSONDecodeError) as exc:
        raise CorruptFile(f"{path}: unreadable header ({exc})") from exc
    return ModelParams(weights=weights, bias=bias, metadata=header.get("metadata", {}))
