"""Corpus layer: the 7-label taxonomy, annotation files, assembly and splits.

The per-resume annotation file is the interchange format of the whole
workbench: UTF-8 text, one ``LABEL<TAB>sentence`` line per sentence, LF
terminated, lines in sentence order. Reading and writing are strict
bijections so files survive round trips byte for byte.
"""

from __future__ import annotations

import enum
import hashlib
import json
import os
import tempfile
from collections import Counter
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import BadRatios, DuplicateDocId, EmptyCorpus, FormatError, UnknownLabel


class Label(enum.Enum):
    """Sentence category; declaration order is the canonical button order."""

    EXPERIENCE = "EXPERIENCE"
    PERSONAL_INFO = "PI"
    SUMMARY = "SUMMARY"
    EDUCATION = "EDUCATION"
    QUALIFICATION = "QUALIFICATION"
    SKILL = "SKILL"
    OBJECT = "OBJECT"

    @property
    def token(self) -> str:
        return self.value

    @property
    def ordinal(self) -> int:
        return _ORDINALS[self]


LABELS: tuple[Label, ...] = tuple(Label)
LABEL_TOKENS: tuple[str, ...] = tuple(label.token for label in LABELS)
_ORDINALS = {label: i for i, label in enumerate(LABELS)}
_BY_TOKEN = {label.token: label for label in LABELS}


def parse_label(token: str) -> Label:
    """Parse a serialized label token, case-insensitively."""
    label = _BY_TOKEN.get(token.strip().upper())
    if label is None:
        raise UnknownLabel(f"not a label token: {token!r}")
    return label


@dataclass
class AnnotatedSentence:
    doc_id: str
    index: int
    text: str
    label: Label

    def __post_init__(self):
        # tabs and newlines would break the line format
        self.text = self.text.replace("\t", " ").replace("\n", " ")


@dataclass
class ResumeAnnotationFile:
    doc_id: str
    sentences: list[AnnotatedSentence]

    def validate(self) -> None:
        for i, s in enumerate(self.sentences):
            if s.index != i:
                raise FormatError(f"{self.doc_id}: sentence indices not contiguous at {i}")
            if s.doc_id != self.doc_id:
                raise FormatError(f"{self.doc_id}: sentence {i} belongs to {s.doc_id}")


def render_annotation_file(file: ResumeAnnotationFile) -> str:
    return "".join(f"{s.label.token}\t{s.text}\n" for s in file.sentences)


def parse_annotation_text(doc_id: str, content: str) -> ResumeAnnotationFile:
    if content and not content.endswith("\n"):
        raise FormatError(f"{doc_id}: missing trailing newline")
    sentences: list[AnnotatedSentence] = []
    for lineno, line in enumerate(content.split("\n")[:-1] if content else [], start=1):
        parts = line.split("\t")
        if len(parts) != 2:
            raise FormatError(f"{doc_id}: line {lineno}: expected LABEL<TAB>text")
        token, text = parts
        if not text:
            raise FormatError(f"{doc_id}: line {lineno}: empty sentence text")
        try:
            label = parse_label(token)
        except UnknownLabel as exc:
            raise FormatError(f"{doc_id}: line {lineno}: {exc}") from exc
        sentences.append(AnnotatedSentence(doc_id, lineno - 1, text, label))
    return ResumeAnnotationFile(doc_id=doc_id, sentences=sentences)


def write_annotation_file(file: ResumeAnnotationFile, path: Path) -> None:
    file.validate()
    atomic_write_text(path, render_annotation_file(file))


def read_annotation_file(path: Path) -> ResumeAnnotationFile:
    return parse_annotation_text(path.stem, path.read_text(encoding="utf-8"))


def atomic_write_text(path: Path, content: str) -> None:
    """Write via temp file + rename so readers never see partial content."""
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(content)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


# --- flat sentence table ------------------------------------------------------

def render_sentence_tsv(sentences: Sequence[AnnotatedSentence]) -> str:
    return "".join(f"{s.doc_id}\t{s.index}\t{s.label.token}\t{s.text}\n" for s in sentences)


def parse_sentence_tsv(content: str) -> list[AnnotatedSentence]:
    sentences = []
    for lineno, line in enumerate(content.splitlines(), start=1):
        parts = line.split("\t")
        if len(parts) != 4:
            raise FormatError(f"sentence table line {lineno}: expected 4 columns")
        doc_id, index, token, text = parts
        sentences.append(AnnotatedSentence(doc_id, int(index), text, parse_label(token)))
    return sentences


def write_sentence_tsv(path: Path, sentences: Sequence[AnnotatedSentence]) -> None:
    atomic_write_text(path, render_sentence_tsv(sentences))


def read_sentence_tsv(path: Path) -> list[AnnotatedSentence]:
    return parse_sentence_tsv(path.read_text(encoding="utf-8"))


# --- assembly -----------------------------------------------------------------

@dataclass
class CorpusManifest:
    corpus_id: str
    created: str
    documents: list[tuple[str, int]]
    total_sentences: int
    label_histogram: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "corpus_id": self.corpus_id,
            "created": self.created,
            "documents": [[d, n] for d, n in self.documents],
            "total_sentences": self.total_sentences,
            "label_histogram": dict(self.label_histogram),
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "CorpusManifest":
        return cls(
            corpus_id=raw["corpus_id"],
            created=raw["created"],
            documents=[(d, int(n)) for d, n in raw["documents"]],
            total_sentences=int(raw["total_sentences"]),
            label_histogram={k: int(v) for k, v in raw["label_histogram"].items()},
        )

    def save(self, path: Path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")

    @classmethod
    def load(cls, path: Path) -> "CorpusManifest":
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))


def resolve_created(created: str | None = None) -> str:
    """Creation timestamp; RCW_EPOCH / SOURCE_DATE_EPOCH pin it for
    reproducible outputs."""
    if created:
        return created
    for var in ("RCW_EPOCH", "SOURCE_DATE_EPOCH"):
        raw = os.environ.get(var)
        if raw is not None:
            stamp = datetime.fromtimestamp(int(raw), tz=timezone.utc)
            return stamp.isoformat().replace("+00:00", "Z")
    return datetime.now(tz=timezone.utc).isoformat(timespec="seconds").replace("+00:00", "Z")


def assemble(
    files: Iterable[ResumeAnnotationFile],
    corpus_id: str | None = None,
    created: str | None = None,
) -> tuple[CorpusManifest, list[AnnotatedSentence]]:
    """Merge per-resume annotation files into a manifest plus a flat
    sentence table ordered by (doc_id, index)."""
    by_doc: dict[str, ResumeAnnotationFile] = {}
    for file in files:
        file.validate()
        if file.doc_id in by_doc:
            raise DuplicateDocId(f"doc_id appears twice: {file.doc_id!r}")
        by_doc[file.doc_id] = file
    table: list[AnnotatedSentence] = []
    documents: list[tuple[str, int]] = []
    histogram: Counter = Counter()
    for doc_id in sorted(by_doc):
        file = by_doc[doc_id]
        documents.append((doc_id, len(file.sentences)))
        table.extend(file.sentences)
        histogram.update(s.label.token for s in file.sentences)
    if corpus_id is None:
        digest = hashlib.sha256(render_sentence_tsv(table).encode("utf-8")).hexdigest()
        corpus_id = f"corpus-{digest[:12]}"
    manifest = CorpusManifest(
        corpus_id=corpus_id,
        created=resolve_created(created),
        documents=documents,
        total_sentences=len(table),
        label_histogram={t: histogram.get(t, 0) for t in LABEL_TOKENS},
    )
    return manifest, table


def np_ordinals(sentences: Sequence[AnnotatedSentence]) -> np.ndarray:
    """Label ordinals as the int64 array the training kernels expect."""
    return np.asarray([s.label.ordinal for s in sentences], dtype=np.int64)


def class_distribution(sentences: Sequence[AnnotatedSentence]) -> dict[Label, float]:
    if not sentences:
        raise EmptyCorpus("cannot compute a distribution over zero sentences")
    counts = Counter(s.label for s in sentences)
    n = len(sentences)
    return {label: counts.get(label, 0) / n for label in LABELS}


# --- splitting ----------------------------------------------------------------

@dataclass
class DatasetSplit:
    seed: int
    ratios: tuple[float, float, float] | None
    sizes: tuple[int, int, int]
    train: list[AnnotatedSentence] = field(repr=False)
    valid: list[AnnotatedSentence] = field(repr=False)
    test: list[AnnotatedSentence] = field(repr=False)

    PART_NAMES = ("train", "valid", "test")

    def parts(self) -> dict[str, list[AnnotatedSentence]]:
        return {"train": self.train, "valid": self.valid, "test": self.test}

    def to_dict(self) -> dict:
        return {
            "seed": self.seed,
            "ratios": list(self.ratios) if self.ratios else None,
            "sizes": list(self.sizes),
            "parts": {
                name: [[s.doc_id, s.index] for s in part]
                for name, part in self.parts().items()
            },
        }

    def save(self, path: Path) -> None:
        atomic_write_text(path, json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n")


def largest_remainder(total: int, ratios: Sequence[float]) -> list[int]:
    """Integer allocation of ``total`` by ``ratios``; ties go to the
    earlier part (train before valid before test)."""
    quotas = [r * total for r in ratios]
    base = [int(q) for q in quotas]
    leftover = total - sum(base)
    order = sorted(range(len(ratios)), key=lambda i: (-(quotas[i] - base[i]), i))
    for i in order[:leftover]:
        base[i] += 1
    return base


def _check_ratios(ratios: Sequence[float]) -> tuple[float, float, float]:
    if len(ratios) != 3:
        raise BadRatios(f"expected 3 ratios, got {len(ratios)}")
    if any(r <= 0 for r in ratios):
        raise BadRatios(f"ratios must be positive: {ratios}")
    if abs(sum(ratios) - 1.0) > 1e-9:
        raise BadRatios(f"ratios must sum to 1: {ratios}")
    return tuple(ratios)  # type: ignore[return-value]


def split(
    sentences: Sequence[AnnotatedSentence],
    ratios: Sequence[float] = (0.7, 0.15, 0.15),
    seed: int = 0,
    stratified: bool = False,
) -> DatasetSplit:
    """Shuffle with a seeded PCG64 and partition by largest-remainder
    rounding of the ratios."""
    ratios = _check_ratios(ratios)
    if stratified:
        assignment = _stratified_assignment(sentences, ratios, seed)
    else:
        perm = np.random.default_rng(seed).permutation(len(sentences))
        sizes = largest_remainder(len(sentences), ratios)
        assignment = _slice_assignment(perm, sizes)
    parts = [[sentences[i] for i in idx] for idx in assignment]
    return DatasetSplit(
        seed=seed,
        ratios=ratios,
        sizes=tuple(len(p) for p in parts),  # type: ignore[arg-type]
        train=parts[0],
        valid=parts[1],
        test=parts[2],
    )


def split_sizes(
    sentences: Sequence[AnnotatedSentence],
    sizes: Sequence[int],
    seed: int = 0,
) -> DatasetSplit:
    """Partition into exact absolute part sizes (must cover the corpus)."""
    if len(sizes) != 3 or any(s < 0 for s in sizes):
        raise BadRatios(f"expected 3 non-negative sizes, got {sizes}")
    if sum(sizes) != len(sentences):
        raise BadRatios(f"sizes {tuple(sizes)} do not sum to corpus size {len(sentences)}")
    perm = np.random.default_rng(seed).permutation(len(sentences))
    assignment = _slice_assignment(perm, list(sizes))
    parts = [[sentences[i] for i in idx] for idx in assignment]
    return DatasetSplit(
        seed=seed,
        ratios=None,
        sizes=tuple(int(s) for s in sizes),  # type: ignore[arg-type]
        train=parts[0],
        valid=parts[1],
        test=parts[2],
    )


def _slice_assignment(perm: np.ndarray, sizes: Sequence[int]) -> list[list[int]]:
    bounds = np.cumsum([0] + list(sizes))
    return [perm[bounds[i]:bounds[i + 1]].tolist() for i in range(len(sizes))]


def _stratified_assignment(
    sentences: Sequence[AnnotatedSentence],
    ratios: tuple[float, float, float],
    seed: int,
) -> list[list[int]]:
    rng = np.random.default_rng(seed)
    by_label: dict[Label, list[int]] = {label: [] for label in LABELS}
    for i, s in enumerate(sentences):
        by_label[s.label].append(i)
    assignment: list[list[int]] = [[], [], []]
    for label in LABELS:
        idx = by_label[label]
        if not idx:
            continue
        perm = rng.permutation(len(idx))
        shuffled = [idx[j] for j in perm]
        sizes = largest_remainder(len(idx), ratios)
        for part, chunk in enumerate(_slice_assignment(np.arange(len(idx)), sizes)):
            assignment[part].extend(shuffled[j] for j in chunk)
    return assignment
