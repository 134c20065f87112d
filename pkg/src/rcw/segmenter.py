"""Deterministic rule-based sentence segmentation.

Rules, applied in order:

1. every LF is a hard boundary (resumes are line-structured);
2. within a line, split after ``. ! ? ;`` when followed by whitespace or
   end-of-line, unless the period ends a known abbreviation, sits inside a
   digit-bearing token (``v2.0``), or belongs to an email/URL token;
3. leading bullet glyphs and numeric markers are stripped from each
   fragment;
4. fragments shorter than ``min_chars`` after trimming are dropped.

Spans always index into the normalized document text, and a sentence's
text is exactly ``doc.text[start:end]``.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .ingest import NormalizedDocument

DEFAULT_ABBREVIATIONS = (
    "Mr", "Ms", "Dr", "Inc", "Ltd", "St", "Jr", "Sr",
    "etc", "e.g", "i.e", "B.S", "M.S", "Ph.D",
)


@dataclass(frozen=True)
class SegmentationConfig:
    abbreviations: tuple[str, ...] = DEFAULT_ABBREVIATIONS
    min_chars: int = 2
    punctuation: str = ".!?;"

    def to_dict(self) -> dict:
        return {
            "abbreviations": list(self.abbreviations),
            "min_chars": self.min_chars,
            "punctuation": self.punctuation,
        }

    @classmethod
    def from_dict(cls, raw: dict) -> "SegmentationConfig":
        return cls(
            abbreviations=tuple(raw.get("abbreviations", DEFAULT_ABBREVIATIONS)),
            min_chars=int(raw.get("min_chars", 2)),
            punctuation=str(raw.get("punctuation", ".!?;")),
        )

    def save(self, path: Path) -> None:
        path.write_text(json.dumps(self.to_dict(), indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: Path) -> "SegmentationConfig":
        return cls.from_dict(json.loads(path.read_text(encoding="utf-8")))


@dataclass(frozen=True)
class Sentence:
    doc_id: str
    index: int
    text: str
    span: tuple[int, int]


# bullet glyphs: • and ◦ are never content; - and * only when followed by
# whitespace (keeps "-5 degrees" intact); numeric markers like "1." "2)"
# need a trailing boundary so "3.5 GPA" is untouched
_BULLET_RE = re.compile(r"(?:[•◦]|[-*](?=\s|$)|\d{1,2}[.)](?=\s|$))\s*")


def segment(doc: NormalizedDocument, config: SegmentationConfig | None = None) -> list[Sentence]:
    """Split a normalized document into ordered, span-tracked sentences."""
    config = config or SegmentationConfig()
    sentences: list[Sentence] = []
    for start, end in _fragments(doc.text, config):
        if end - start < config.min_chars:
            continue
        sentences.append(
            Sentence(
                doc_id=doc.doc_id,
                index=len(sentences),
                text=doc.text[start:end],
                span=(start, end),
            )
        )
    return sentences


def _fragments(text: str, config: SegmentationConfig) -> list[tuple[int, int]]:
    """All trimmed fragment spans, before the min-length filter."""
    spans: list[tuple[int, int]] = []
    offset = 0
    for line in text.split("\n"):
        frag_start = 0
        for i, ch in enumerate(line):
            if ch not in config.punctuation:
                continue
            at_eol = i + 1 == len(line)
            if not at_eol and not line[i + 1].isspace():
                continue
            if ch == "." and _period_guarded(line, i, config):
                continue
            spans.append(_trim(text, offset + frag_start, offset + i + 1))
            frag_start = i + 1
        if frag_start < len(line):
            spans.append(_trim(text, offset + frag_start, offset + len(line)))
        offset += len(line) + 1
    return [s for s in spans if s[1] > s[0]]


def _token_around(line: str, i: int) -> tuple[str, int]:
    """Maximal non-whitespace run containing position ``i`` and its start."""
    a = i
    while a > 0 and not line[a - 1].isspace():
        a -= 1
    b = i + 1
    while b < len(line) and not line[b].isspace():
        b += 1
    return line[a:b], a


def _period_guarded(line: str, i: int, config: SegmentationConfig) -> bool:
    token, a = _token_around(line, i)
    if "@" in token or "://" in token:
        return True
    internal = i - a + 1 < len(token)
    if internal and any(c.isdigit() for c in token):
        return True
    stem = line[a:i].lstrip("(\"'[{“‘")
    abbreviations = {s.lower() for s in config.abbreviations}
    return stem.lower() in abbreviations


def _trim(text: str, start: int, end: int) -> tuple[int, int]:
    """Narrow a span past surrounding whitespace and leading bullets."""
    while start < end and text[start].isspace():
        start += 1
    while end > start and text[end - 1].isspace():
        end -= 1
    while start < end:
        m = _BULLET_RE.match(text[start:end])
        if not m or m.end() == 0:
            break
        start += m.end()
    while end > start and text[end - 1].isspace():
        end -= 1
    return start, end


@dataclass
class CoverageReport:
    """Multiset diff between segmentable document characters and sentences."""

    missing: Counter = field(default_factory=Counter)
    unexpected: Counter = field(default_factory=Counter)

    @property
    def lossless(self) -> bool:
        return not self.missing and not self.unexpected


def coverage_check(
    doc: NormalizedDocument,
    sentences: list[Sentence],
    config: SegmentationConfig | None = None,
) -> CoverageReport:
    """Compare non-whitespace, non-bullet characters of the document with
    the concatenated sentence texts.

    An empty diff means segmentation was lossless; with the default rules
    the only expected leftovers are characters of fragments that fell under
    ``min_chars``.
    """
    config = config or SegmentationConfig()
    expected: Counter = Counter()
    for start, end in _fragments(doc.text, config):
        expected.update(c for c in doc.text[start:end] if not c.isspace())
    got: Counter = Counter()
    for s in sentences:
        got.update(c for c in s.text if not c.isspace())
    return CoverageReport(missing=expected - got, unexpected=got - expected)
