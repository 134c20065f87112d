"""Deterministic synthetic fixtures: labeled sentences and resume files.

Every generator is driven by a caller-supplied seed and nothing else, so
fixtures can be regenerated byte-for-byte. Sentence text is assembled
from per-label template pools whose content words do not overlap across
labels; a linear classifier should separate them comfortably, which is
what the classifier sanity checks rely on.

Resume-file generation round-trips through the real pipeline: after a
file is written it is re-ingested and re-segmented, and the expected
annotation file is built from the sentences the pipeline actually
produces. A mismatch between planned lines and segmented sentences is a
generator bug and raises immediately.
"""

from __future__ import annotations

import random
import zipfile
import zlib
from dataclasses import dataclass
from pathlib import Path
from xml.sax.saxutils import escape

from .corpus import (
    LABELS,
    AnnotatedSentence,
    Label,
    ResumeAnnotationFile,
    largest_remainder,
    write_annotation_file,
)
from .ingest import ingest_file
from .segmenter import SegmentationConfig, segment

# Fractions from the corpus analysis: Experience 50%, Skill 7%, Object 3%,
# Qualification 1%. The remaining 39% is split across the three
# headline-free categories; that allocation is this module's choice.
IMBALANCED_PROPORTIONS: dict[Label, float] = {
    Label.EXPERIENCE: 0.50,
    Label.PERSONAL_INFO: 0.19,
    Label.SUMMARY: 0.12,
    Label.EDUCATION: 0.08,
    Label.QUALIFICATION: 0.01,
    Label.SKILL: 0.07,
    Label.OBJECT: 0.03,
}

_FIRST = ("Marcus", "Elena", "Priya", "Tomas", "Ingrid", "Dana", "Victor", "Wei", "Sofia", "Ravi")
_LAST = ("Webb", "Sorensen", "Patel", "Alvarez", "Lindqvist", "Okafor", "Marsh", "Tanaka", "Novak", "Reyes")
_CITY = ("Denver", "Austin", "Raleigh", "Tacoma", "Boise", "Omaha", "Tucson", "Madison")
_STATE = ("Colorado", "Texas", "North Carolina", "Washington", "Idaho", "Nebraska", "Arizona", "Wisconsin")

_POOLS: dict[Label, tuple[tuple[str, ...], dict[str, tuple[str, ...]]]] = {
    Label.EXPERIENCE: (
        (
            "{verb} {thing} at {org} from {y1} to {y2}.",
            "{verb} {thing} across {count} regional offices.",
            "{verb} {thing} and cut turnaround from days to hours.",
            "Previously {verb2} {thing} at {org}.",
        ),
        {
            "verb": ("Led", "Managed", "Supervised", "Coordinated", "Overhauled", "Launched", "Rebuilt", "Streamlined"),
            "verb2": ("led", "managed", "supervised", "coordinated", "overhauled", "launched"),
            "thing": (
                "the billing platform", "a payments pipeline", "the onboarding workflow",
                "the nightly reconciliation jobs", "a warehouse intake crew", "the dispatch roster",
                "the invoicing queue", "a field maintenance rotation",
            ),
            "org": ("Acme Corp", "Northwind Traders", "Globex", "Initech", "Vandelay Industries", "Wernham Hogg"),
            "count": ("three", "four", "five", "six", "seven"),
            "y1": ("2009", "2011", "2013", "2015", "2017"),
            "y2": ("2018", "2019", "2020", "2021", "2022"),
        },
    ),
    Label.PERSONAL_INFO: (
        (
            "{first} {last}.",
            "Reach me at {email}.",
            "Contact number 555 {digits}.",
            "Based in {city}, {state}.",
        ),
        {
            "first": _FIRST,
            "last": _LAST,
            "email": tuple(f"{f.lower()}.{l.lower()}@example.com" for f, l in zip(_FIRST, _LAST)),
            "digits": ("0142", "0193", "0268", "0317", "0455", "0521"),
            "city": _CITY,
            "state": _STATE,
        },
    ),
    Label.SUMMARY: (
        (
            "{adj} {noun} with {years} years of hands-on delivery behind them.",
            "{adj} {noun} known for calm heads-down execution.",
            "A {adj2} {noun} comfortable owning problems end to end.",
        ),
        {
            "adj": ("Seasoned", "Versatile", "Dependable", "Pragmatic", "Resourceful"),
            "adj2": ("seasoned", "versatile", "dependable", "pragmatic", "resourceful"),
            "noun": ("generalist", "operator", "practitioner", "builder", "problem solver"),
            "years": ("six", "eight", "nine", "eleven", "twelve", "fifteen"),
        },
    ),
    Label.EDUCATION: (
        (
            "Bachelor of {field} degree, {school}, class of {year}.",
            "Master of {field} degree from {school}.",
            "B.S. in {field2}, {school}, {year}.",
            "Completed coursework toward a Ph.D. in {field2} at {school}.",
        ),
        {
            "field": ("Science", "Arts", "Commerce", "Engineering"),
            "field2": ("Statistics", "Economics", "Linguistics", "Chemistry", "History", "Mathematics"),
            "school": ("State University", "Riverside College", "Lakeview Institute", "Harborview Polytechnic"),
            "year": ("2008", "2010", "2012", "2014", "2016"),
        },
    ),
    Label.QUALIFICATION: (
        (
            "Certified {cert} since {year}.",
            "Holds a current {cert} certificate.",
            "Accredited {cert}, renewal due {year}.",
        ),
        {
            "cert": (
                "forklift operator", "scrum practitioner", "first aid responder",
                "quality auditor", "crane rigger", "food safety handler",
            ),
            "year": ("2018", "2019", "2020", "2023", "2024"),
        },
    ),
    Label.SKILL: (
        (
            "Proficient with {tool1}, {tool2}, and {tool3}.",
            "Fluent in {lang1} and {lang2}.",
            "Comfortable across {tool1} and {tool3}.",
        ),
        {
            "tool1": ("Python", "Terraform", "Excel", "Tableau", "Figma"),
            "tool2": ("PostgreSQL", "Redis", "Airflow", "Grafana"),
            "tool3": ("Docker", "Linux", "Snowflake", "Kafka"),
            "lang1": ("Spanish", "German", "Mandarin"),
            "lang2": ("French", "Portuguese", "Japanese"),
        },
    ),
    Label.OBJECT: (
        (
            "Seeking a {level} {role} role on a {team} team.",
            "Aiming to grow into a {level} {role} position.",
            "Looking for {role} work closer to {team} concerns.",
        ),
        {
            "level": ("senior", "staff", "lead", "principal"),
            "role": ("reliability", "logistics", "procurement", "scheduling", "compliance"),
            "team": ("distribution", "infrastructure", "fulfillment", "planning"),
        },
    ),
}


def make_sentence(label: Label, rng: random.Random) -> str:
    templates, pools = _POOLS[label]
    template = rng.choice(templates)
    return template.format(**{slot: rng.choice(values) for slot, values in pools.items()})


def synthetic_sentences(
    n: int,
    seed: int = 0,
    proportions: dict[Label, float] | None = None,
    doc_size: int = 50,
) -> list[AnnotatedSentence]:
    """``n`` labeled sentences grouped into documents of ``doc_size``.

    Label counts are exact largest-remainder allocations of the requested
    proportions (balanced across the 7 labels by default), shuffled by the
    seed; the same (n, seed, proportions) always yields the same corpus.
    """
    if n < 1:
        raise ValueError("n must be positive")
    fractions = [proportions[label] if proportions else 1 / len(LABELS) for label in LABELS]
    counts = largest_remainder(n, fractions)
    labels = [label for label, count in zip(LABELS, counts) for _ in range(count)]
    rng = random.Random(seed)
    rng.shuffle(labels)
    return [
        AnnotatedSentence(f"syn-{i // doc_size:05d}", i % doc_size, make_sentence(label, rng), label)
        for i, label in enumerate(labels)
    ]


# --- resume file fixtures -------------------------------------------------------

_SECTION_PLAN = (
    # (label, min lines, max lines)
    (Label.PERSONAL_INFO, 2, 3),
    (Label.SUMMARY, 1, 2),
    (Label.OBJECT, 0, 1),
    (Label.EXPERIENCE, 3, 6),
    (Label.EDUCATION, 1, 2),
    (Label.QUALIFICATION, 0, 2),
    (Label.SKILL, 1, 2),
)


def _resume_blocks(rng: random.Random) -> list[list[tuple[Label, str]]]:
    blocks = []
    for label, lo, hi in _SECTION_PLAN:
        n_lines = rng.randint(lo, hi)
        if n_lines == 0:
            continue
        lines = []
        seen: set[str] = set()
        while len(lines) < n_lines:
            text = make_sentence(label, rng)
            if text in seen:
                continue  # duplicate lines inside one resume read as broken
            seen.add(text)
            lines.append((label, text))
        blocks.append(lines)
    return blocks


def _render_resume(blocks: list[list[tuple[Label, str]]], bullet: str, rng: random.Random) -> str:
    rendered = []
    for lines in blocks:
        label = lines[0][0]
        use_bullets = label in (Label.EXPERIENCE, Label.SKILL, Label.QUALIFICATION) and rng.random() < 0.7
        rendered.append("\n".join((bullet if use_bullets else "") + text for _, text in lines))
    return "\n\n".join(rendered) + "\n"


def write_minimal_docx(path: Path, paragraphs: list[str]) -> None:
    """Smallest usable docx container; fixed zip timestamps keep the file
    byte-reproducible."""
    body = "".join(
        f'<w:p><w:r><w:t xml:space="preserve">{escape(p)}</w:t></w:r></w:p>' if p else "<w:p/>"
        for p in paragraphs
    )
    document = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<w:document xmlns:w="http://schemas.openxmlformats.org/wordprocessingml/2006/main">'
        f"<w:body>{body}</w:body></w:document>"
    )
    content_types = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<Types xmlns="http://schemas.openxmlformats.org/package/2006/content-types">'
        '<Default Extension="rels" ContentType="application/vnd.openxmlformats-package.relationships+xml"/>'
        '<Default Extension="xml" ContentType="application/xml"/>'
        '<Override PartName="/word/document.xml" ContentType='
        '"application/vnd.openxmlformats-officedocument.wordprocessingml.document.main+xml"/>'
        "</Types>"
    )
    rels = (
        '<?xml version="1.0" encoding="UTF-8" standalone="yes"?>'
        '<Relationships xmlns="http://schemas.openxmlformats.org/package/2006/relationships">'
        '<Relationship Id="rId1" Type="http://schemas.openxmlformats.org/officeDocument/2006/'
        'relationships/officeDocument" Target="word/document.xml"/>'
        "</Relationships>"
    )
    parts = [
        ("[Content_Types].xml", content_types),
        ("_rels/.rels", rels),
        ("word/document.xml", document),
    ]
    with zipfile.ZipFile(path, "w") as zf:
        for name, data in parts:
            info = zipfile.ZipInfo(name, date_time=(1980, 1, 1, 0, 0, 0))
            info.compress_type = zipfile.ZIP_DEFLATED
            info.external_attr = 0o644 << 16
            zf.writestr(info, data.encode("utf-8"))


def _pdf_escape(line: str) -> bytes:
    out = line.replace("\\", r"\\").replace("(", r"\(").replace(")", r"\)")
    return out.encode("latin-1")  # raises on exotic glyphs: keep pdf fixtures ascii


def write_minimal_pdf(path: Path, lines: list[str]) -> None:
    """One-page PDF with a flate-compressed text content stream."""
    shown = [line for line in lines if line.strip()]
    ops = [b"BT", b"/F1 11 Tf", b"72 760 Td"]
    for line in shown:
        ops.append(b"(" + _pdf_escape(line) + b") Tj")
        ops.append(b"0 -14 Td")
    ops.append(b"ET")
    stream = zlib.compress(b"\n".join(ops))
    bodies = {
        1: b"<< /Type /Catalog /Pages 2 0 R >>",
        2: b"<< /Type /Pages /Kids [3 0 R] /Count 1 >>",
        3: (
            b"<< /Type /Page /Parent 2 0 R /MediaBox [0 0 612 792] "
            b"/Resources << /Font << /F1 4 0 R >> >> /Contents 5 0 R >>"
        ),
        4: b"<< /Type /Font /Subtype /Type1 /BaseFont /Helvetica >>",
        5: b"<< /Length " + str(len(stream)).encode() + b" /Filter /FlateDecode >>\nstream\n" + stream + b"\nendstream",
    }
    blob = bytearray(b"%PDF-1.4\n")
    offsets = {}
    for num, body in bodies.items():
        offsets[num] = len(blob)
        blob += f"{num} 0 obj\n".encode() + body + b"\nendobj\n"
    xref_at = len(blob)
    blob += b"xref\n0 6\n0000000000 65535 f \n"
    for num in bodies:
        blob += f"{offsets[num]:010d} 00000 n \n".encode()
    blob += b"trailer\n<< /Size 6 /Root 1 0 R >>\nstartxref\n" + str(xref_at).encode() + b"\n%%EOF\n"
    Path(path).write_bytes(bytes(blob))


@dataclass
class ResumeFixture:
    doc_id: str
    path: Path
    annotation: ResumeAnnotationFile


def _format_for(k: int) -> str:
    if k % 11 == 7:
        return "pdf"
    if k % 5 == 3:
        return "docx"
    return "txt"


def write_fixture_tree(
    root: Path,
    n_resumes: int = 60,
    seed: int = 0,
    seg_config: SegmentationConfig | None = None,
) -> list[ResumeFixture]:
    """Write ``root``/resumes (mixed txt/docx/pdf) and ``root``/annotations
    (the matching expected annotation files)."""
    root = Path(root)
    resume_dir = root / "resumes"
    ann_dir = root / "annotations"
    resume_dir.mkdir(parents=True, exist_ok=True)
    ann_dir.mkdir(parents=True, exist_ok=True)
    seg_config = seg_config or SegmentationConfig()
    rng = random.Random(seed)
    fixtures = []
    for k in range(n_resumes):
        doc_id = f"resume-{k:03d}"
        fmt = _format_for(k)
        blocks = _resume_blocks(rng)
        bullet = "- " if fmt == "pdf" else rng.choice(("• ", "- ", "* "))
        text = _render_resume(blocks, bullet, rng)
        path = resume_dir / f"{doc_id}.{fmt}"
        if fmt == "txt":
            path.write_bytes(text.encode("utf-8"))
        elif fmt == "docx":
            write_minimal_docx(path, text.split("\n"))
        else:
            write_minimal_pdf(path, text.split("\n"))
        planned = [(label, line) for block in blocks for label, line in block]
        doc = ingest_file(path)
        sentences = segment(doc, seg_config)
        if len(sentences) != len(planned):
            raise RuntimeError(
                f"{doc_id} ({fmt}): planned {len(planned)} sentences, pipeline produced {len(sentences)}"
            )
        annotated = []
        for sentence, (label, line) in zip(sentences, planned):
            if sentence.text != line:
                raise RuntimeError(f"{doc_id} ({fmt}): planned {line!r}, pipeline produced {sentence.text!r}")
            annotated.append(AnnotatedSentence(doc_id, sentence.index, sentence.text, label))
        afile = ResumeAnnotationFile(doc_id=doc_id, sentences=annotated)
        write_annotation_file(afile, ann_dir / f"{doc_id}.txt")
        fixtures.append(ResumeFixture(doc_id=doc_id, path=path, annotation=afile))
    return fixtures
