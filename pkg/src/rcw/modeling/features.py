"""Hashed n-gram featurization.

Lowercase, tokenize on non-alphanumeric boundaries, emit unigrams and
bigrams, hash each n-gram with FNV-1a 64 modulo the dimensionality, count
occurrences, L2-normalize. Counts are small integers, so the normalization
is bit-exact regardless of backend.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .backend import active_backend

TOKENIZER_VERSION = "lower-alnum-uni+bi-fnv1a64-v1"

_TOKEN_RE = re.compile(r"[^\W_]+", re.UNICODE)

_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass
class FeatureVector:
    """Sparse L2-normalized vector: sorted unique bucket indices + weights."""

    dim: int
    indices: np.ndarray
    values: np.ndarray


def l2_normalize(values: np.ndarray) -> np.ndarray:
    norm = float(np.sqrt(values @ values))
    return values / norm if norm > 0 else values


def featurize(text: str, dim: int = 2 ** 18, kernels=None) -> FeatureVector:
    kernels = kernels or active_backend()
    tokens = [t.encode("utf-8") for t in tokenize(text)]
    if not tokens:
        return FeatureVector(dim=dim, indices=_EMPTY_I.copy(), values=_EMPTY_F.copy())
    buckets = kernels.ngram_buckets(tokens, dim)
    indices, counts = np.unique(buckets, return_counts=True)
    return FeatureVector(dim=dim, indices=indices, values=l2_normalize(counts.astype(np.float64)))


@dataclass
class SparseRows:
    """CSR-layout feature matrix; prefix slices share the same buffers."""

    indptr: np.ndarray
    indices: np.ndarray
    data: np.ndarray
    dim: int

    @property
    def n_rows(self) -> int:
        return len(self.indptr) - 1

    def prefix(self, n: int) -> "SparseRows":
        end = int(self.indptr[n])
        return SparseRows(self.indptr[: n + 1], self.indices[:end], self.data[:end], self.dim)

    def to_scipy(self):
        from scipy.sparse import csr_matrix

        return csr_matrix(
            (self.data, self.indices, self.indptr),
            shape=(self.n_rows, self.dim),
        )


def featurize_rows(texts: Iterable[str], dim: int = 2 ** 18, kernels=None) -> SparseRows:
    """Featurize many texts into one CSR matrix."""
    kernels = kernels or active_backend()
    indptr = [0]
    index_chunks: list[np.ndarray] = []
    value_chunks: list[np.ndarray] = []
    for text in texts:
        fv = featurize(text, dim, kernels)
        index_chunks.append(fv.indices)
        value_chunks.append(fv.values)
        indptr.append(indptr[-1] + len(fv.indices))
    return SparseRows(
        indptr=np.asarray(indptr, dtype=np.int64),
        indices=np.concatenate(index_chunks) if index_chunks else _EMPTY_I.copy(),
        data=np.concatenate(value_chunks) if value_chunks else _EMPTY_F.copy(),
        dim=dim,
    )


def rows_from_vectors(vectors: Sequence[FeatureVector], dim: int) -> SparseRows:
    indptr = np.zeros(len(vectors) + 1, dtype=np.int64)
    for i, fv in enumerate(vectors):
        indptr[i + 1] = indptr[i] + len(fv.indices)
    return SparseRows(
        indptr=indptr,
        indices=np.concatenate([fv.indices for fv in vectors]) if vectors else _EMPTY_I.copy(),
        data=np.concatenate([fv.values for fv in vectors]) if vectors else _EMPTY_F.copy(),
        dim=dim,
    )
