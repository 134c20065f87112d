"""Pure numpy fallback for the hot kernels.

Mirrors the compiled extension operation for operation: FNV-1a 64-bit
n-gram hashing, one epoch of mini-batch softmax-regression SGD with a lazy
L2 weight scale, and a full-batch loss/gradient used by the finite
difference checks. Hash buckets are bit-identical to the compiled backend;
float results agree to rounding because accumulation orders differ.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "pure"

_FNV_OFFSET = 0xCBF29CE484222325
_FNV_PRIME = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def _fnv1a(h: int, data: bytes) -> int:
    for byte in data:
        h = ((h ^ byte) * _FNV_PRIME) & _MASK64
    return h


def ngram_buckets(tokens: list[bytes], dim: int) -> np.ndarray:
    """Hash buckets for all unigrams then bigrams, in token order."""
    n = len(tokens)
    out = np.empty(n + max(n - 1, 0), dtype=np.int64)
    for i, tok in enumerate(tokens):
        out[i] = _fnv1a(_FNV_OFFSET, tok) % dim
    for i in range(n - 1):
        h = _fnv1a(_FNV_OFFSET, tokens[i])
        h = ((h ^ 0x20) * _FNV_PRIME) & _MASK64  # separator: single space
        out[n + i] = _fnv1a(h, tokens[i + 1]) % dim
    return out


def sgd_epoch(indptr, indices, data, labels, order, weights, bias, scale, lr, l2, batch_size):
    """One pass of mini-batch SGD over the rows listed in ``order``.

    ``weights`` stores the lazily scaled matrix: the effective weights are
    ``scale * weights``. Updates happen in place; returns the new scale and
    the mean data loss (regularizer excluded).
    """
    n = order.shape[0]
    n_classes = weights.shape[0]
    total_loss = 0.0
    for k in range(0, n, batch_size):
        rows = order[k:k + batch_size]
        bsz = rows.shape[0]
        counts = indptr[rows + 1] - indptr[rows]
        nnz = int(counts.sum())
        cols = np.empty(nnz, dtype=np.int64)
        vals = np.empty(nnz, dtype=np.float64)
        pos = 0
        for r, c in zip(rows, counts):
            cols[pos:pos + c] = indices[indptr[r]:indptr[r] + c]
            vals[pos:pos + c] = data[indptr[r]:indptr[r] + c]
            pos += c
        erow = np.repeat(np.arange(bsz), counts)

        logits = np.broadcast_to(bias, (bsz, n_classes)).copy()
        np.add.at(logits, erow, (weights[:, cols] * vals).T * scale)
        y = labels[rows]
        m = logits.max(axis=1)
        ex = np.exp(logits - m[:, None])
        z = ex.sum(axis=1)
        total_loss -= float((logits[np.arange(bsz), y] - m - np.log(z)).sum())

        err = ex / z[:, None]
        err[np.arange(bsz), y] -= 1.0
        bias -= lr * err.mean(axis=0)
        scale *= 1.0 - lr * l2
        contrib = err[erow] * (vals * (-lr / (bsz * scale)))[:, None]
        for c in range(n_classes):
            np.add.at(weights[c], cols, contrib[:, c])
    return scale, total_loss / n


def loss_and_grad(indptr, indices, data, labels, weights, bias, l2):
    """Full-batch mean cross-entropy with L2, plus its exact gradient."""
    n = indptr.shape[0] - 1
    n_classes = weights.shape[0]
    cols = indices
    vals = data
    counts = indptr[1:] - indptr[:-1]
    erow = np.repeat(np.arange(n), counts)

    logits = np.broadcast_to(bias, (n, n_classes)).copy()
    np.add.at(logits, erow, (weights[:, cols] * vals).T)
    m = logits.max(axis=1)
    ex = np.exp(logits - m[:, None])
    z = ex.sum(axis=1)
    loss = -float((logits[np.arange(n), labels] - m - np.log(z)).sum()) / n
    loss += 0.5 * l2 * float((weights * weights).sum())

    err = ex / z[:, None]
    err[np.arange(n), labels] -= 1.0
    grad_w = l2 * weights.copy()
    contrib = err[erow] * (vals / n)[:, None]
    for c in range(n_classes):
        np.add.at(grad_w[c], cols, contrib[:, c])
    grad_b = err.sum(axis=0) / n
    return loss, grad_w, grad_b
