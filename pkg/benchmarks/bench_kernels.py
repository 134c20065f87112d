"""Compare the compiled and pure kernel backends on the two hot paths:
n-gram bucket hashing and one SGD epoch. Run directly:

    python3 benchmarks/bench_kernels.py [--n 20000] [--dim 262144]
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from rcw.corpus import np_ordinals
from rcw.fixtures import synthetic_sentences
from rcw.modeling import TrainConfig, available_backends, featurize_rows, get_backend, tokenize, train_rows
from rcw.modeling.backend import _FORCE_ENV


def bench_hashing(kernels, token_lists, dim, repeats=3):
    best = float("inf")
    for _ in range(repeats):
        t0 = time.perf_counter()
        for tokens in token_lists:
            kernels.ngram_buckets(tokens, dim)
        best = min(best, time.perf_counter() - t0)
    return best


def bench_epoch(kernels, rows, labels, cfg, repeats=3):
    weights = np.zeros((7, cfg.dim))
    bias = np.zeros(7)
    order = np.arange(rows.n_rows, dtype=np.int64)
    best = float("inf")
    for _ in range(repeats):
        w, b = weights.copy(), bias.copy()
        t0 = time.perf_counter()
        kernels.sgd_epoch(rows.indptr, rows.indices, rows.data, labels, order,
                          w, b, 1.0, cfg.learning_rate, cfg.l2, cfg.batch_size)
        best = min(best, time.perf_counter() - t0)
    return best


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--n", type=int, default=20000, help="sentences to featurize/train on")
    parser.add_argument("--dim", type=int, default=2 ** 18)
    args = parser.parse_args()

    names = available_backends()
    print(f"backends: {', '.join(names)} (force with {_FORCE_ENV})")
    sentences = synthetic_sentences(args.n, seed=0)
    token_lists = [[t.encode("utf-8") for t in tokenize(s.text)] for s in sentences]
    rows = featurize_rows([s.text for s in sentences], args.dim)
    labels = np_ordinals(sentences)
    cfg = TrainConfig(dim=args.dim)

    results = {}
    for name in names:
        kernels = get_backend(name)
        hash_s = bench_hashing(kernels, token_lists, args.dim)
        epoch_s = bench_epoch(kernels, rows, labels, cfg)
        results[name] = (hash_s, epoch_s)
        print(f"{name:>9}:  ngram_buckets {hash_s * 1e3:8.1f} ms   sgd_epoch {epoch_s * 1e3:8.1f} ms")

    if "compiled" in results and "pure" in results:
        for i, stage in enumerate(("ngram_buckets", "sgd_epoch")):
            speedup = results["pure"][i] / results["compiled"][i]
            print(f"{stage}: compiled is {speedup:.1f}x the pure backend")

    # end-to-end sanity: same model to float tolerance across backends
    if len(names) == 2:
        models = {}
        for name in names:
            import os

            os.environ[_FORCE_ENV] = name
            models[name] = train_rows(rows, labels, TrainConfig(dim=args.dim, epochs=1))
            del os.environ[_FORCE_ENV]
        dw = np.abs(models["compiled"].weights - models["pure"].weights).max()
        print(f"max |w_compiled - w_pure| after one epoch: {dw:.2e}")


if __name__ == "__main__":
    main()
