import random
from pathlib import Path

import pytest

from rcw.corpus import LABELS, AnnotatedSentence, ResumeAnnotationFile

FIXTURES = Path(__file__).resolve().parent.parent / "fixtures"

# pools for randomized annotation-file content; tabs and newlines are
# excluded because sentence text is defined as a single line
_WORDS = (
    "alpha", "beta", "gamma", "delta", "sigma", "lambda", "vector", "matrix",
    "resume", "review", "ledger", "pipeline", "quarter", "launch", "montage",
    "café", "résumé", "über", "中文", "naïve",
)
_PUNCT = (".", ",", "!", "?", ";", ":", "(", ")", "%", "/", "-", "@")


def random_text(rng: random.Random, max_words: int = 12) -> str:
    n = rng.randint(1, max_words)
    words = [rng.choice(_WORDS) for _ in range(n)]
    if rng.random() < 0.5:
        words[-1] += rng.choice(_PUNCT)
    return " ".join(words)


def random_annotation_file(doc_id: str, rng: random.Random, max_sentences: int = 30) -> ResumeAnnotationFile:
    n = rng.randint(1, max_sentences)
    sentences = [
        AnnotatedSentence(doc_id, i, random_text(rng), rng.choice(LABELS))
        for i in range(n)
    ]
    return ResumeAnnotationFile(doc_id=doc_id, sentences=sentences)


@pytest.fixture(scope="session")
def fixture_tree() -> Path:
    if not (FIXTURES / "resumes").is_dir() or not (FIXTURES / "annotations").is_dir():
        pytest.fail(f"fixture corpus missing under {FIXTURES}; run: rcw fixtures --out {FIXTURES}")
    return FIXTURES
