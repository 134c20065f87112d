"""Resume ingestion: format detection and plain-text extraction.

Detection is content-based (magic bytes first, then a printable-text
heuristic); the file-name hint only breaks the Txt/Unknown tie for empty
files. Extraction reduces every supported container to normalized text.
PDF extraction is deliberately best-effort: anything the mini-reader
cannot interpret is skipped and recorded as a warning instead of failing
the batch.
"""

from __future__ import annotations

import enum
import io
import re
import unicodedata
import zipfile
import zlib
from dataclasses import dataclass, field
from pathlib import Path
from xml.etree import ElementTree

from .errors import MalformedDocument, UnsupportedFormat


class SourceFormat(enum.Enum):
    TXT = "txt"
    DOCX = "docx"
    PDF = "pdf"
    UNKNOWN = "unknown"


@dataclass
class RawDocument:
    source_id: str
    format: SourceFormat
    data: bytes


@dataclass
class NormalizedDocument:
    doc_id: str
    text: str
    source_format: SourceFormat
    extraction_warnings: list[str] = field(default_factory=list)


_PDF_MAGIC = b"%PDF"
_ZIP_MAGIC = b"PK\x03\x04"
_PRINTABLE_THRESHOLD = 0.9


def _printable_ratio(text: str) -> float:
    if not text:
        return 1.0
    ok = sum(1 for c in text if c.isprintable() or c in "\n\r\t")
    return ok / len(text)


def detect_format(data: bytes, name_hint: str = "") -> SourceFormat:
    """Classify raw bytes as one of the supported resume formats.

    Magic bytes always win over the name hint; the hint only decides the
    degenerate empty-file case (an empty ``.txt`` is still a text file).
    """
    if not data:
        return SourceFormat.TXT if name_hint.lower().endswith(".txt") else SourceFormat.UNKNOWN
    if data.startswith(_PDF_MAGIC):
        return SourceFormat.PDF
    if data.startswith(_ZIP_MAGIC):
        try:
            with zipfile.ZipFile(io.BytesIO(data)) as zf:
                if "word/document.xml" in zf.namelist():
                    return SourceFormat.DOCX
        except zipfile.BadZipFile:
            pass
        # zip container without a word document part: fall through to the
        # text heuristic, which rejects it as binary
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError:
        text = data.decode("latin-1")
    if _printable_ratio(text) >= _PRINTABLE_THRESHOLD:
        return SourceFormat.TXT
    return SourceFormat.UNKNOWN


def normalize_text(text: str) -> str:
    """Canonicalize extracted text.

    NFC, CR/CRLF to LF, tabs to single spaces, per-line trailing
    whitespace stripped, blank-line runs capped at one empty line, and
    leading/trailing blank lines removed. Idempotent.
    """
    text = unicodedata.normalize("NFC", text)
    text = text.replace("\x00", "")
    text = text.replace("\r\n", "\n").replace("\r", "\n")
    text = text.replace("\t", " ")
    text = "\n".join(line.rstrip() for line in text.split("\n"))
    text = re.sub(r"\n{3,}", "\n\n", text)
    return text.strip("\n")


def extract_text(doc: RawDocument) -> NormalizedDocument:
    """Extract normalized plain text from a detected document."""
    warnings: list[str] = []
    if doc.format is SourceFormat.TXT:
        raw = _decode_txt(doc.data, warnings)
    elif doc.format is SourceFormat.DOCX:
        raw = _extract_docx(doc.data)
    elif doc.format is SourceFormat.PDF:
        raw = _extract_pdf(doc.data, warnings)
    else:
        raise UnsupportedFormat(f"cannot extract text from {doc.source_id!r} (format unknown)")
    nul_count = raw.count("\x00")
    if nul_count:
        warnings.append(f"dropped {nul_count} NUL characters")
    text = normalize_text(raw)
    if not text:
        warnings.append("empty document")
    return NormalizedDocument(
        doc_id=doc.source_id,
        text=text,
        source_format=doc.format,
        extraction_warnings=warnings,
    )


def _decode_txt(data: bytes, warnings: list[str]) -> str:
    try:
        return data.decode("utf-8")
    except UnicodeDecodeError:
        warnings.append("utf-8 decode failed; fell back to latin-1")
        return data.decode("latin-1")


_W = "{http://schemas.openxmlformats.org/wordprocessingml/2006/main}"


def _extract_docx(data: bytes) -> str:
    try:
        with zipfile.ZipFile(io.BytesIO(data)) as zf:
            xml = zf.read("word/document.xml")
    except (zipfile.BadZipFile, KeyError) as exc:
        raise MalformedDocument(f"unreadable docx container: {exc}") from exc
    try:
        root = ElementTree.fromstring(xml)
    except ElementTree.ParseError as exc:
        raise MalformedDocument(f"unparseable document.xml: {exc}") from exc
    paragraphs = []
    for para in root.iter(_W + "p"):
        parts = []
        for node in para.iter():
            if node.tag == _W + "t":
                parts.append(node.text or "")
            elif node.tag == _W + "tab":
                parts.append(" ")
            elif node.tag == _W + "br":
                parts.append("\n")
        paragraphs.append("".join(parts))
    return "\n".join(paragraphs)


# --- minimal PDF text extraction --------------------------------------------
#
# Reads content streams directly: FlateDecode or plain streams, BT/ET text
# blocks, Tj/TJ/'/" show operators, Td/TD/Tm/T* positioning. A LF is
# inserted whenever the vertical position changes between shown strings.
# Everything else (fonts, encodings beyond latin-1, xref tables) is ignored.

_OBJ_RE = re.compile(rb"(\d+)\s+\d+\s+obj\b(.*?)endobj", re.DOTALL)
_STREAM_RE = re.compile(rb"stream\r?\n(.*?)\r?\nendstream", re.DOTALL)
_NUMBER_RE = re.compile(rb"[+-]?(?:\d+\.\d*|\.\d+|\d+)")


def _extract_pdf(data: bytes, warnings: list[str]) -> str:
    pieces: list[str] = []
    for match in _OBJ_RE.finditer(data):
        obj_num, body = match.group(1).decode("ascii"), match.group(2)
        sm = _STREAM_RE.search(body)
        if sm is None:
            continue
        head, payload = body[: sm.start()], sm.group(1)
        if b"/FlateDecode" in head:
            try:
                payload = zlib.decompress(payload)
            except zlib.error as exc:
                warnings.append(f"skipped object {obj_num}: inflate failed ({exc})")
                continue
        elif b"/Filter" in head:
            warnings.append(f"skipped object {obj_num}: unsupported stream filter")
            continue
        if b"BT" not in payload:
            continue
        try:
            text = _content_stream_text(payload)
        except Exception as exc:
            warnings.append(f"skipped object {obj_num}: unparseable content stream ({exc})")
            continue
        if text:
            pieces.append(text)
    if not pieces and b"stream" in data:
        warnings.append("no text content recovered")
    return "\n".join(pieces)


def _content_stream_text(payload: bytes) -> str:
    out: list[str] = []
    stack: list[object] = []
    y = 0.0
    last_y: float | None = None

    def show(s: str) -> None:
        nonlocal last_y
        if last_y is not None and abs(y - last_y) > 1e-6:
            out.append("\n")
        out.append(s)
        last_y = y

    i, n = 0, len(payload)
    while i < n:
        c = payload[i : i + 1]
        if c.isspace():
            i += 1
        elif c == b"(":
            s, i = _pdf_string(payload, i)
            stack.append(s)
        elif c == b"<" and payload[i : i + 2] != b"<<":
            j = payload.index(b">", i)
            hexdigits = re.sub(rb"\s", b"", payload[i + 1 : j])
            if len(hexdigits) % 2:
                hexdigits += b"0"
            stack.append(bytes.fromhex(hexdigits.decode("ascii")).decode("latin-1"))
            i = j + 1
        elif payload[i : i + 2] == b"<<":
            depth, i = 1, i + 2
            while i < n and depth:
                if payload[i : i + 2] == b"<<":
                    depth, i = depth + 1, i + 2
                elif payload[i : i + 2] == b">>":
                    depth, i = depth - 1, i + 2
                else:
                    i += 1
        elif c in (b"[", b"]"):
            i += 1  # TJ arrays: strings accumulate on the stack anyway
        elif c == b"/":
            m = re.match(rb"/[^\s/()<>\[\]{}%]*", payload[i:])
            i += m.end()
        elif c == b"%":
            j = payload.find(b"\n", i)
            i = n if j < 0 else j + 1
        else:
            m = _NUMBER_RE.match(payload, i)
            if m and m.start() == i:
                stack.append(float(m.group()))
                i = m.end()
                continue
            m = re.match(rb"[A-Za-z'\"*]+", payload[i:])
            if not m:
                i += 1
                continue
            op = m.group()
            i += m.end()
            if op in (b"Td", b"TD"):
                if len(stack) >= 2 and isinstance(stack[-1], float):
                    y += stack[-1]
            elif op == b"Tm":
                if len(stack) >= 6 and isinstance(stack[-1], float):
                    y = stack[-1]
            elif op == b"T*":
                y -= 1.0
            elif op in (b"Tj", b"'", b'"'):
                if op != b"Tj":
                    y -= 1.0
                strings = [v for v in stack if isinstance(v, str)]
                if strings:
                    show(strings[-1])
            elif op == b"TJ":
                joined = "".join(v for v in stack if isinstance(v, str))
                if joined:
                    show(joined)
            stack.clear()
    return "".join(out)


_PDF_ESCAPES = {
    b"n": "\n", b"r": "\r", b"t": "\t", b"b": "\b", b"f": "\f",
    b"(": "(", b")": ")", b"\\": "\\",
}


def _pdf_string(payload: bytes, start: int) -> tuple[str, int]:
    """Decode a parenthesized PDF string starting at ``start``."""
    chars: list[str] = []
    depth = 1
    i = start + 1
    n = len(payload)
    while i < n and depth:
        c = payload[i : i + 1]
        if c == b"\\":
            esc = payload[i + 1 : i + 2]
            if esc.isdigit():
                octal = payload[i + 1 : i + 4]
                octal = octal[: len(re.match(rb"[0-7]{1,3}", octal).group())]
                chars.append(chr(int(octal, 8)))
                i += 1 + len(octal)
            else:
                chars.append(_PDF_ESCAPES.get(esc, esc.decode("latin-1")))
                i += 2
        elif c == b"(":
            depth += 1
            chars.append("(")
            i += 1
        elif c == b")":
            depth -= 1
            if depth:
                chars.append(")")
            i += 1
        else:
            chars.append(c.decode("latin-1"))
            i += 1
    return "".join(chars), i


def ingest_file(path: Path, source_id: str | None = None) -> NormalizedDocument:
    """Detect and extract a single resume file."""
    data = path.read_bytes()
    fmt = detect_format(data, path.name)
    doc = RawDocument(source_id=source_id or path.stem, format=fmt, data=data)
    return extract_text(doc)


def ingest_directory(directory: Path) -> tuple[list[NormalizedDocument], list[str]]:
    """Ingest every regular file under ``directory`` (sorted, non-recursive).

    Returns the extracted documents plus a ``doc_id\\twarning`` log stream;
    undetectable files are skipped with a warning and never reach
    segmentation.
    """
    docs: list[NormalizedDocument] = []
    log: list[str] = []
    seen: set[str] = set()
    for path in sorted(p for p in directory.iterdir() if p.is_file()):
        source_id = path.stem
        if source_id in seen:
            source_id = path.name.replace(".", "_")
        seen.add(source_id)
        data = path.read_bytes()
        fmt = detect_format(data, path.name)
        if fmt is SourceFormat.UNKNOWN:
            log.append(f"{source_id}\tskipped: undetectable format")
            continue
        doc = extract_text(RawDocument(source_id=source_id, format=fmt, data=data))
        docs.append(doc)
        log.extend(f"{doc.doc_id}\t{w}" for w in doc.extraction_warnings)
    return docs, log
