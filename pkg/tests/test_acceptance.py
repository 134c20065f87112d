"""Acceptance gate: one test per release criterion.

Run ``pytest tests/test_acceptance.py -v`` for one pass/fail line per
criterion. Stated runtime bounds are asserted inside the tests.
"""

from __future__ import annotations

import json
import random
import shutil
import subprocess
import sys
import threading
import time
from collections import Counter
from pathlib import Path

import numpy as np
import pytest
from fastapi.testclient import TestClient

from rcw.corpus import (
    AnnotatedSentence,
    LABELS,
    Label,
    largest_remainder,
    parse_annotation_text,
    read_annotation_file,
    render_annotation_file,
    split,
    split_sizes,
    write_annotation_file,
)
from rcw.evaluation import distribution_report, f1_micro, learning_curve, run_experiment
from rcw.fixtures import IMBALANCED_PROPORTIONS, synthetic_sentences
from rcw.ingest import SourceFormat, NormalizedDocument, normalize_text
from rcw.modeling import TrainConfig, active_backend, featurize_rows, save_model, train_rows
from rcw.cli import _write_split_dir
from rcw.segmenter import SegmentationConfig, coverage_check, segment
from rcw.service import AnnotationEngine, create_app

from conftest import random_annotation_file


def run_cli(*args: str, cwd: Path) -> subprocess.CompletedProcess:
    return subprocess.run(
        [sys.executable, "-m", "rcw.cli", *args],
        capture_output=True,
        text=True,
        cwd=cwd,
        timeout=300,
    )


@pytest.fixture(scope="module")
def big_corpus() -> list[AnnotatedSentence]:
    return synthetic_sentences(78000, seed=0)


def test_metric_oracle():
    """f1_micro == accuracy on 1000 random instances, == pooled-count
    brute force on 100 instances, in under 5 seconds."""
    t0 = time.monotonic()
    rng = random.Random(0)
    for _ in range(1000):
        n = rng.randint(1, 50)
        truth = [rng.randrange(7) for _ in range(n)]
        pred = [rng.randrange(7) for _ in range(n)]
        accuracy = sum(t == p for t, p in zip(truth, pred)) / n
        assert f1_micro(truth, pred) == accuracy
    for _ in range(100):
        n = rng.randint(1, 12)
        truth = [rng.randrange(7) for _ in range(n)]
        pred = [rng.randrange(7) for _ in range(n)]
        tp = fp = fn = 0
        for c in range(7):
            tp += sum(1 for t, p in zip(truth, pred) if t == c and p == c)
            fp += sum(1 for t, p in zip(truth, pred) if t != c and p == c)
            fn += sum(1 for t, p in zip(truth, pred) if t == c and p != c)
        assert f1_micro(truth, pred) == 2 * tp / (2 * tp + fp + fn)
    elapsed = time.monotonic() - t0
    assert elapsed < 5.0, f"metric oracle took {elapsed:.1f}s"
    print(f"PASS metric oracle ({elapsed:.2f}s)")


def test_split_arithmetic(big_corpus):
    """78000 at (0.7,0.15,0.15) -> exactly (54600,11700,11700); absolute
    sizes -> exactly (58000,10000,10000); partition holds on 100 random
    (corpus, seed) pairs."""
    assert largest_remainder(78000, (0.7, 0.15, 0.15)) == [54600, 11700, 11700]
    ratio_split = split(big_corpus, (0.7, 0.15, 0.15), seed=1)
    assert ratio_split.sizes == (54600, 11700, 11700)
    absolute = split_sizes(big_corpus, (58000, 10000, 10000), seed=1)
    assert absolute.sizes == (58000, 10000, 10000)

    rng = random.Random(1)
    for _ in range(100):
        n = rng.randint(1, 300)
        seed = rng.randrange(2 ** 32)
        corpus = [
            AnnotatedSentence(f"d{i // 7}", i % 7, f"s {i}", LABELS[i % 7]) for i in range(n)
        ]
        parts = split(corpus, (0.7, 0.15, 0.15), seed=seed)
        key = lambda s: (s.doc_id, s.index)
        merged = sorted(parts.train + parts.valid + parts.test, key=key)
        assert merged == sorted(corpus, key=key)
        assert sum(parts.sizes) == n
    print("PASS split arithmetic")


def _random_resume_doc(rng: random.Random) -> NormalizedDocument:
    abbrevs = ["Dr.", "Inc.", "e.g.", "B.S.", "Ph.D."]
    words = ["led", "team", "of", "built", "python", "shipped", "v2.0", "2019",
             "gpa", "3.5", "contact", "jd@x.co", "https://e.co/v1.0"]
    bullets = ["• ", "- ", "* ", "1. ", "12) ", ""]
    lines = []
    for _ in range(rng.randint(1, 10)):
        parts = []
        for _ in range(rng.randint(1, 3)):
            sent = " ".join(rng.choice(words + abbrevs) for _ in range(rng.randint(1, 8)))
            parts.append(sent + rng.choice([".", "!", "?", ";", ""]))
        lines.append(rng.choice(bullets) + " ".join(parts))
    text = normalize_text("\n".join(lines))
    return NormalizedDocument(doc_id="synthetic", text=text, source_format=SourceFormat.TXT)


def test_segmentation_properties():
    """Determinism, span fidelity, and coverage on 200 random documents
    plus the hand-built edge fixtures, in under 10 seconds."""
    t0 = time.monotonic()
    rng = random.Random(0)
    min1 = SegmentationConfig(min_chars=1)
    for _ in range(200):
        doc = _random_resume_doc(rng)
        first = segment(doc)
        assert first == segment(doc)  # determinism
        for s in first:
            assert s.text == doc.text[s.span[0]:s.span[1]]  # span fidelity
        assert [s.index for s in first] == list(range(len(first)))
        report = coverage_check(doc, first)
        assert not report.unexpected
        # missing chars are exactly those of fragments under min_chars
        everything = segment(doc, min1)
        dropped: Counter = Counter()
        for s in everything:
            if len(s.text) < 2:
                dropped.update(c for c in s.text if not c.isspace())
        assert report.missing == dropped
        assert coverage_check(doc, everything, min1).lossless

    edge_cases = {
        "": [],
        "John Doe\nSoftware Engineer.": ["John Doe", "Software Engineer."],
        "• Led a team of 5. Shipped v2.0 in 2019.": ["Led a team of 5.", "Shipped v2.0 in 2019."],
        "B.S. in Computer Science, 2015.": ["B.S. in Computer Science, 2015."],
        "GPA 3.5 overall. Honors.": ["GPA 3.5 overall.", "Honors."],
        "Email jd@x.co. Thanks.": ["Email jd@x.co. Thanks."],
        "1. Numbered item": ["Numbered item"],
        "Hello there. x": ["Hello there."],
    }
    for raw, expected in edge_cases.items():
        doc = NormalizedDocument(doc_id="edge", text=normalize_text(raw), source_format=SourceFormat.TXT)
        assert [s.text for s in segment(doc)] == expected, raw
    elapsed = time.monotonic() - t0
    assert elapsed < 10.0, f"segmentation checks took {elapsed:.1f}s"
    print(f"PASS segmentation properties ({elapsed:.2f}s)")


def test_annotation_round_trip_and_exactly_once(tmp_path):
    """Byte-exact annotation file round trip over 100 random resumes;
    two concurrent clients never share a document and each file is
    exported exactly once."""
    rng = random.Random(7)
    for k in range(100):
        original = random_annotation_file(f"resume-{k:03d}", rng)
        path = tmp_path / "files" / f"{original.doc_id}.txt"
        write_annotation_file(original, path)
        assert read_annotation_file(path) == original
        assert path.read_bytes() == render_annotation_file(original).encode("utf-8")

    docs = [(f"doc-{i:02d}", [f"sentence {j} of {i}." for j in range(4)]) for i in range(10)]
    engine = AnnotationEngine(docs, tmp_path / "out", lease_seconds=300)
    app = create_app(engine)
    seen: list[str] = []
    errors: list[Exception] = []
    lock = threading.Lock()

    def client_loop(name: str):
        client = TestClient(app)
        try:
            r = client.post("/api/sessions", json={"annotator_id": name})
            if r.status_code == 409:
                return
            body = r.json()
            sid = body["session_id"]
            while True:
                with lock:
                    seen.append(body["doc_id"])
                for sentence in body["sentences"]:
                    rr = client.post(
                        f"/api/sessions/{sid}/labels",
                        json={"index": sentence["index"], "label": "EXPERIENCE"},
                    )
                    assert rr.status_code == 200, rr.text
                rc = client.post(f"/api/sessions/{sid}/complete")
                assert rc.status_code == 200, rc.text
                nxt = rc.json()["next"]
                if nxt is None:
                    return
                body = {**nxt, "session_id": sid}
        except Exception as exc:
            with lock:
                errors.append(exc)

    threads = [threading.Thread(target=client_loop, args=(f"client-{i}",)) for i in range(2)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert errors == []
    assert len(seen) == len(set(seen)) == 10  # no double checkout
    exported = sorted(p.name for p in (tmp_path / "out").iterdir())
    assert exported == sorted(f"{d}.txt" for d, _ in docs)  # no duplicates, none missing
    print("PASS annotation round trip and exactly-once export")


def test_classifier_sanity(tmp_path):
    """3-run mean test F1 >= 0.95 on the separable fixture corpus in
    under 30 seconds; analytic gradient within 1e-4 of central finite
    differences on 20 toy instances; same seed gives identical model
    bytes."""
    t0 = time.monotonic()
    sentences = synthetic_sentences(3500, seed=0)
    sp = split(sentences, (0.7, 0.15, 0.15), seed=0)
    result = run_experiment(sp, TrainConfig(), n_runs=3)
    assert result.mean_test_f1 >= 0.95, f"mean test F1 {result.mean_test_f1:.4f}"
    train_elapsed = time.monotonic() - t0
    assert train_elapsed < 30.0, f"fixture training took {train_elapsed:.1f}s"

    kernels = active_backend()
    rng = np.random.default_rng(0)
    words = "led built sold python java summary contact skill".split()
    for case in range(20):
        py_rng = random.Random(case)
        texts = [" ".join(py_rng.choice(words) for _ in range(py_rng.randint(1, 6))) for _ in range(5)]
        rows = featurize_rows(texts, dim=32)
        y = np.asarray(rng.integers(0, 7, size=5), dtype=np.int64)
        w = rng.normal(scale=0.5, size=(7, 32))
        b = rng.normal(scale=0.5, size=7)
        _, grad_w, grad_b = kernels.loss_and_grad(rows.indptr, rows.indices, rows.data, y, w, b, 1e-3)

        def loss_at(wm, bv):
            return kernels.loss_and_grad(rows.indptr, rows.indices, rows.data, y, wm, bv, 1e-3)[0]

        eps = 1e-6
        for c, j in zip(rng.integers(0, 7, 10), rng.integers(0, 32, 10)):
            wp, wm = w.copy(), w.copy()
            wp[c, j] += eps
            wm[c, j] -= eps
            fd = (loss_at(wp, b) - loss_at(wm, b)) / (2 * eps)
            denom = max(abs(fd), abs(grad_w[c, j]), 1e-8)
            assert abs(fd - grad_w[c, j]) / denom <= 1e-4
        for c in range(7):
            bp, bm = b.copy(), b.copy()
            bp[c] += eps
            bm[c] -= eps
            fd = (loss_at(w, bp) - loss_at(w, bm)) / (2 * eps)
            denom = max(abs(fd), abs(grad_b[c]), 1e-8)
            assert abs(fd - grad_b[c]) / denom <= 1e-4

    cfg = TrainConfig(epochs=3, dim=2 ** 14, seed=11)
    rows = featurize_rows([s.text for s in sp.train[:500]], cfg.dim)
    labels = np.asarray([s.label.ordinal for s in sp.train[:500]], dtype=np.int64)
    save_model(train_rows(rows, labels, cfg), tmp_path / "a.rcwm")
    save_model(train_rows(rows, labels, cfg), tmp_path / "b.rcwm")
    assert (tmp_path / "a.rcwm").read_bytes() == (tmp_path / "b.rcwm").read_bytes()
    elapsed = time.monotonic() - t0
    print(f"PASS classifier sanity (mean test F1 {result.mean_test_f1:.4f}, {elapsed:.2f}s)")


def test_ablation_harness_shape(tmp_path, big_corpus):
    """ablate --sizes 10000:55000:5000 on a 78000-sentence corpus emits
    exactly 10 points; prefixes nest; the full-pool point equals the
    plain eval run."""
    sp = split_sizes(big_corpus, (58000, 10000, 10000), seed=0)
    work = tmp_path / "work"
    _write_split_dir(sp, work / "split")

    proc = run_cli(
        "--work-dir", str(work), "--seed", "0", "ablate",
        "--sizes", "10000:55000:5000", "--runs", "1", "--dim", "4096", "--epochs", "2",
        cwd=tmp_path,
    )
    assert proc.returncode == 0, proc.stderr
    curve = json.loads((work / "reports" / "curve.json").read_text(encoding="utf-8"))
    assert [p["train_size"] for p in curve["points"]] == list(range(10000, 55001, 5000))
    assert len(curve["points"]) == 10

    cfg = TrainConfig(epochs=2, dim=4096, seed=0)
    # nesting: a point recomputed alone matches the full curve's point
    alone = learning_curve(sp, [10000], cfg, n_runs=1)
    assert alone.points[0].test_f1s == curve["points"][0]["test_f1s"]
    assert alone.points[0].valid_f1s == curve["points"][0]["valid_f1s"]
    # full pool == plain repeated-eval run, exactly
    full = learning_curve(sp, [58000], cfg, n_runs=1)
    experiment = run_experiment(sp, cfg, n_runs=1)
    assert full.points[0].test_f1s == experiment.test_f1s
    assert full.points[0].valid_f1s == experiment.valid_f1s
    print("PASS ablation harness shape (10 points, nested, full pool == eval)")


def test_distribution_report_fractions():
    """The imbalanced fixture reproduces Experience 50%, Skill 7%,
    Object 3%, Qualification 1% within +-0.5%."""
    sentences = synthetic_sentences(10000, seed=0, proportions=IMBALANCED_PROPORTIONS)
    report = distribution_report(sentences)
    targets = {
        Label.EXPERIENCE: 0.50,
        Label.SKILL: 0.07,
        Label.OBJECT: 0.03,
        Label.QUALIFICATION: 0.01,
    }
    for label, target in targets.items():
        got = report.fractions[label.token]
        assert abs(got - target) <= 0.005, f"{label.token}: {got:.4f} vs {target:.4f}"
    print("PASS distribution report fractions")


def test_end_to_end_deterministic(tmp_path, fixture_tree):
    """The e2e pipeline completes in under 60 seconds and two runs with
    the same seed produce byte-identical artifact trees."""
    t0 = time.monotonic()
    trees = []
    for name in ("w1", "w2"):
        work = tmp_path / name
        proc = run_cli(
            "--work-dir", str(work), "--seed", "0", "e2e",
            "--fixtures", str(fixture_tree),
            cwd=tmp_path,
        )
        assert proc.returncode == 0, proc.stderr + proc.stdout
        assert "[6/6]" in proc.stdout
        trees.append(
            {
                p.relative_to(work).as_posix(): p.read_bytes()
                for p in sorted(work.rglob("*"))
                if p.is_file()
            }
        )
    elapsed = time.monotonic() - t0
    assert elapsed < 60.0, f"two e2e runs took {elapsed:.1f}s"
    assert trees[0].keys() == trees[1].keys()
    for key in trees[0]:
        assert trees[0][key] == trees[1][key], f"{key} differs between identical runs"
    print(f"PASS end-to-end deterministic ({elapsed:.2f}s for two runs)")
