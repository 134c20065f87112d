"""Metrics and the experiment harness.

F1-micro over the seven labels, confusion matrices, repeated runs with
derived seeds, learning curves over nested train subsets, and the label
distribution report. Plot rendering is out of scope: curves and
distributions are emitted as flat TSV for external tooling.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from pathlib import Path
from statistics import fmean
from typing import Sequence

import numpy as np

from .corpus import LABELS, AnnotatedSentence, DatasetSplit, Label, atomic_write_text, class_distribution
from .errors import EmptyInput, LengthMismatch, SizeExceedsPool
from .modeling import (
    ModelParams,
    SparseRows,
    TrainConfig,
    featurize_rows,
    predict_rows,
    save_model,
    train_rows,
)

N_CLASSES = len(LABELS)


def _as_ordinals(labels: Sequence[Label | int]) -> np.ndarray:
    out = np.empty(len(labels), dtype=np.int64)
    for i, item in enumerate(labels):
        out[i] = item.ordinal if isinstance(item, Label) else int(item)
    if len(out) and (out.min() < 0 or out.max() >= N_CLASSES):
        raise ValueError("label ordinal out of range")
    return out


@dataclass
class ConfusionMatrix:
    """Counts with true labels on rows, predicted on columns."""

    counts: np.ndarray  # (7, 7) int64

    @property
    def total(self) -> int:
        return int(self.counts.sum())

    def row_normalized(self) -> np.ndarray:
        """Each row divided by its support; zero-support rows stay zero."""
        counts = self.counts.astype(np.float64)
        support = counts.sum(axis=1, keepdims=True)
        return np.divide(counts, support, out=np.zeros_like(counts), where=support > 0)

    def to_lists(self) -> list[list[int]]:
        return self.counts.tolist()


def confusion(truth: Sequence[Label | int], pred: Sequence[Label | int]) -> ConfusionMatrix:
    t, p = _as_ordinals(truth), _as_ordinals(pred)
    if len(t) != len(p):
        raise LengthMismatch(f"{len(t)} truth labels vs {len(p)} predictions")
    counts = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(counts, (t, p), 1)
    return ConfusionMatrix(counts=counts)


def f1_micro(truth: Sequence[Label | int], pred: Sequence[Label | int]) -> float:
    """Micro-averaged F1 from per-class TP/FP/FN pooled across the seven
    classes. Pooled FP and FN coincide for single-label predictions, so
    this equals accuracy; it is still computed from the pooled counts."""
    if len(truth) != len(pred):
        raise LengthMismatch(f"{len(truth)} truth labels vs {len(pred)} predictions")
    if not len(truth):
        raise EmptyInput("need at least one (truth, pred) pair")
    counts = confusion(truth, pred).counts
    tp = int(np.trace(counts))
    fp = int(counts.sum() - np.trace(counts))  # predicted c, true != c, summed over c
    fn = int(counts.sum() - np.trace(counts))  # true c, predicted != c, summed over c
    return 2 * tp / (2 * tp + fp + fn)


def _per_class(counts: np.ndarray) -> dict[str, dict[str, float | int]]:
    out: dict[str, dict[str, float | int]] = {}
    for i, label in enumerate(LABELS):
        tp = int(counts[i, i])
        fp = int(counts[:, i].sum()) - tp
        fn = int(counts[i, :].sum()) - tp
        precision = tp / (tp + fp) if tp + fp else 0.0
        recall = tp / (tp + fn) if tp + fn else 0.0
        f1 = 2 * precision * recall / (precision + recall) if precision + recall else 0.0
        out[label.token] = {
            "precision": precision,
            "recall": recall,
            "f1": f1,
            "support": tp + fn,
        }
    return out


@dataclass
class EvalReport:
    f1_micro: float
    per_class: dict[str, dict[str, float | int]]
    confusion: ConfusionMatrix
    n_examples: int
    metadata: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "f1_micro": self.f1_micro,
            "per_class": self.per_class,
            "confusion": self.confusion.to_lists(),
            "n_examples": self.n_examples,
            "metadata": self.metadata,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "EvalReport":
        return cls(
            f1_micro=raw["f1_micro"],
            per_class=raw["per_class"],
            confusion=ConfusionMatrix(np.asarray(raw["confusion"], dtype=np.int64)),
            n_examples=raw["n_examples"],
            metadata=raw.get("metadata", {}),
        )

    def save(self, path: Path) -> None:
        atomic_write_text(Path(path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "EvalReport":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def make_report(
    truth: Sequence[Label | int],
    pred: Sequence[Label | int],
    metadata: dict | None = None,
) -> EvalReport:
    cm = confusion(truth, pred)
    return EvalReport(
        f1_micro=f1_micro(truth, pred),
        per_class=_per_class(cm.counts),
        confusion=cm,
        n_examples=cm.total,
        metadata=dict(metadata or {}),
    )


def _model_id(model: ModelParams) -> str:
    digest = hashlib.sha256(model.weights.tobytes() + model.bias.tobytes())
    return digest.hexdigest()[:12]


def evaluate_model(model: ModelParams, rows: SparseRows, truth: np.ndarray, metadata: dict | None = None) -> EvalReport:
    pred, _ = predict_rows(model, rows)
    meta = {"model_id": _model_id(model), **(metadata or {})}
    return make_report(truth, pred, meta)


# --- repeated runs -------------------------------------------------------------

def _ordinals_of(sentences: Sequence[AnnotatedSentence]) -> np.ndarray:
    return np.asarray([s.label.ordinal for s in sentences], dtype=np.int64)


def _shuffled_pool(sentences: Sequence[AnnotatedSentence], seed: int) -> list[AnnotatedSentence]:
    perm = np.random.default_rng(seed % 2 ** 64).permutation(len(sentences))
    return [sentences[i] for i in perm]


@dataclass
class RunResult:
    run_index: int
    seed: int
    valid: EvalReport
    test: EvalReport


@dataclass
class ExperimentResult:
    base_seed: int
    n_train: int
    runs: list[RunResult]

    @property
    def valid_f1s(self) -> list[float]:
        return [r.valid.f1_micro for r in self.runs]

    @property
    def test_f1s(self) -> list[float]:
        return [r.test.f1_micro for r in self.runs]

    @property
    def mean_valid_f1(self) -> float:
        return fmean(self.valid_f1s)

    @property
    def mean_test_f1(self) -> float:
        return fmean(self.test_f1s)

    def to_dict(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "n_train": self.n_train,
            "mean_valid_f1": self.mean_valid_f1,
            "mean_test_f1": self.mean_test_f1,
            "runs": [
                {
                    "run_index": r.run_index,
                    "seed": r.seed,
                    "valid_f1": r.valid.f1_micro,
                    "test_f1": r.test.f1_micro,
                }
                for r in self.runs
            ],
        }

    def save(self, path: Path) -> None:
        atomic_write_text(Path(path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def run_experiment(
    split: DatasetSplit,
    cfg: TrainConfig,
    n_runs: int = 3,
    out_dir: Path | None = None,
) -> ExperimentResult:
    """Train/evaluate ``n_runs`` times; run ``i`` uses seed ``cfg.seed + i``.

    The train pool is shuffled once with the base seed before feature
    extraction, so a full-pool learning-curve point reproduces this
    result exactly. Per-run models and reports are persisted under
    ``out_dir`` when given.
    """
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    pool = _shuffled_pool(split.train, cfg.seed)
    train_mat = featurize_rows([s.text for s in pool], cfg.dim)
    train_y = _ordinals_of(pool)
    parts = {
        "valid": (featurize_rows([s.text for s in split.valid], cfg.dim), _ordinals_of(split.valid)),
        "test": (featurize_rows([s.text for s in split.test], cfg.dim), _ordinals_of(split.test)),
    }
    runs = []
    for run_index in range(n_runs):
        run_cfg = replace(cfg, seed=cfg.seed + run_index)
        model = train_rows(train_mat, train_y, run_cfg)
        reports = {}
        for part, (rows, truth) in parts.items():
            reports[part] = evaluate_model(
                model, rows, truth,
                {"seed": run_cfg.seed, "split": part, "run_index": run_index},
            )
        runs.append(RunResult(run_index, run_cfg.seed, reports["valid"], reports["test"]))
        if out_dir is not None:
            run_dir = Path(out_dir) / f"run-{run_index}"
            run_dir.mkdir(parents=True, exist_ok=True)
            save_model(model, run_dir / "model.rcwm")
            reports["valid"].save(run_dir / "valid.json")
            reports["test"].save(run_dir / "test.json")
    result = ExperimentResult(base_seed=cfg.seed, n_train=train_mat.n_rows, runs=runs)
    if out_dir is not None:
        result.save(Path(out_dir) / "experiment.json")
    return result


# --- learning curves -----------------------------------------------------------

@dataclass
class CurvePoint:
    train_size: int
    valid_f1s: list[float]
    test_f1s: list[float]

    @property
    def mean_valid_f1(self) -> float:
        return fmean(self.valid_f1s)

    @property
    def mean_test_f1(self) -> float:
        return fmean(self.test_f1s)


@dataclass
class LearningCurve:
    base_seed: int
    points: list[CurvePoint]

    def to_dict(self) -> dict:
        return {
            "base_seed": self.base_seed,
            "points": [
                {
                    "train_size": p.train_size,
                    "mean_valid_f1": p.mean_valid_f1,
                    "mean_test_f1": p.mean_test_f1,
                    "valid_f1s": p.valid_f1s,
                    "test_f1s": p.test_f1s,
                }
                for p in self.points
            ],
        }

    def to_tsv(self) -> str:
        """Flat plot data: size, split, run index, f1. One row per run."""
        lines = ["size\tsplit\trun\tf1"]
        for p in self.points:
            for part, values in (("valid", p.valid_f1s), ("test", p.test_f1s)):
                for run, f1 in enumerate(values):
                    lines.append(f"{p.train_size}\t{part}\t{run}\t{f1!r}")
        return "\n".join(lines) + "\n"

    def save(self, json_path: Path, tsv_path: Path | None = None) -> None:
        atomic_write_text(Path(json_path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        if tsv_path is not None:
            atomic_write_text(Path(tsv_path), self.to_tsv())


def learning_curve(
    split: DatasetSplit,
    sizes: Sequence[int],
    cfg: TrainConfig,
    n_runs: int = 3,
) -> LearningCurve:
    """F1 at each train-pool prefix size, valid/test fixed throughout.

    The pool is shuffled once with the base seed; the subset of size k is
    the first k rows, so smaller subsets are prefixes of larger ones and
    size is the only varying factor. Run i of every point uses seed
    ``cfg.seed + i``, mirroring run_experiment.
    """
    sizes = [int(s) for s in sizes]
    if not sizes:
        raise ValueError("need at least one train size")
    if any(s <= 0 for s in sizes) or any(b <= a for a, b in zip(sizes, sizes[1:])):
        raise ValueError(f"sizes must be positive and strictly increasing: {sizes}")
    if n_runs < 1:
        raise ValueError("n_runs must be >= 1")
    pool = _shuffled_pool(split.train, cfg.seed)
    if sizes[-1] > len(pool):
        raise SizeExceedsPool(f"size {sizes[-1]} exceeds train pool of {len(pool)}")
    pool_mat = featurize_rows([s.text for s in pool], cfg.dim)
    pool_y = _ordinals_of(pool)
    parts = {
        "valid": (featurize_rows([s.text for s in split.valid], cfg.dim), _ordinals_of(split.valid)),
        "test": (featurize_rows([s.text for s in split.test], cfg.dim), _ordinals_of(split.test)),
    }
    points = []
    for size in sizes:
        sub = pool_mat.prefix(size)
        sub_y = pool_y[:size]
        valid_f1s, test_f1s = [], []
        for run_index in range(n_runs):
            run_cfg = replace(cfg, seed=cfg.seed + run_index)
            model = train_rows(sub, sub_y, run_cfg)
            preds = {part: predict_rows(model, rows)[0] for part, (rows, _) in parts.items()}
            valid_f1s.append(f1_micro(parts["valid"][1], preds["valid"]))
            test_f1s.append(f1_micro(parts["test"][1], preds["test"]))
        points.append(CurvePoint(train_size=size, valid_f1s=valid_f1s, test_f1s=test_f1s))
    return LearningCurve(base_seed=cfg.seed, points=points)


# --- label distribution --------------------------------------------------------

@dataclass
class DistributionReport:
    n_sentences: int
    counts: dict[str, int]
    fractions: dict[str, float]

    def render_table(self) -> str:
        width = max(len(t) for t in self.counts)
        lines = [f"{'label'.ljust(width)}  {'count':>8}  {'percent':>8}"]
        for token, count in self.counts.items():
            pct = 100.0 * self.fractions[token]
            lines.append(f"{token.ljust(width)}  {count:>8}  {pct:>7.2f}%")
        lines.append(f"{'total'.ljust(width)}  {self.n_sentences:>8}  {100.0:>7.2f}%")
        return "\n".join(lines) + "\n"

    def plot_tsv(self) -> str:
        lines = ["label\tfraction"]
        lines += [f"{token}\t{frac!r}" for token, frac in self.fractions.items()]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "n_sentences": self.n_sentences,
            "counts": self.counts,
            "fractions": self.fractions,
        }

    def save(self, json_path: Path, tsv_path: Path | None = None) -> None:
        atomic_write_text(Path(json_path), json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")
        if tsv_path is not None:
            atomic_write_text(Path(tsv_path), self.plot_tsv())


def distribution_report(sentences: Sequence[AnnotatedSentence]) -> DistributionReport:
    fractions = class_distribution(sentences)
    counts = {label.token: 0 for label in LABELS}
    for s in sentences:
        counts[s.label.token] += 1
    return DistributionReport(
        n_sentences=len(sentences),
        counts=counts,
        fractions={label.token: fractions[label] for label in LABELS},
    )
