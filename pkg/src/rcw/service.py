"""Annotation backend: a lease-based work queue over HTTP/JSON.

One resume is checked out per session; labels are submitted per sentence
and may be overwritten until completion; completing a resume atomically
exports its annotation file and advances the session to the next pending
resume. All queue mutations go through a single lock, so two sessions can
never hold the same document. Restart recovery is derived from the export
directory: a resume whose annotation file exists is Done.
"""

from __future__ import annotations

import threading
import time
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

from pydantic import BaseModel

from .corpus import (
    LABEL_TOKENS,
    AnnotatedSentence,
    ResumeAnnotationFile,
    parse_annotation_text,
    parse_label,
    write_annotation_file,
)
from .errors import (
    IncompleteAnnotation,
    IndexOutOfRange,
    QueueEmpty,
    UnknownSession,
    WorkbenchError,
)

DEFAULT_LEASE_SECONDS = 30 * 60


@dataclass
class _Session:
    session_id: str
    annotator_id: str
    doc_id: str | None
    labels: dict[int, str] = field(default_factory=dict)  # index -> label token
    status: str = "InProgress"
    exported: list[str] = field(default_factory=list)


class AnnotationEngine:
    """In-memory queue state plus the export directory as ground truth.

    ``docs`` is an ordered list of (doc_id, sentence texts). Leases expire
    after ``lease_seconds`` and are reclaimed lazily; ``clock`` is
    injectable for tests and must be monotonic.
    """

    def __init__(
        self,
        docs: Sequence[tuple[str, list[str]]],
        export_dir: Path,
        lease_seconds: float = DEFAULT_LEASE_SECONDS,
        clock: Callable[[], float] = time.monotonic,
    ):
        self.export_dir = Path(export_dir)
        self.export_dir.mkdir(parents=True, exist_ok=True)
        self.lease_seconds = float(lease_seconds)
        self._clock = clock
        self._lock = threading.Lock()
        self._order = [doc_id for doc_id, _ in docs]
        if len(set(self._order)) != len(self._order):
            raise ValueError("duplicate doc_id in queue")
        self._sentences = {doc_id: list(texts) for doc_id, texts in docs}
        # doc state: "pending" | ("out", session_id, deadline) | "done"
        self._state: dict[str, object] = {doc_id: "pending" for doc_id in self._order}
        self._sessions: dict[str, _Session] = {}
        self._next_session = 1
        self._histogram = {token: 0 for token in LABEL_TOKENS}
        self._recover()

    # -- recovery and lease bookkeeping (callers hold the lock or run in __init__)

    def _recover(self) -> None:
        for doc_id in self._order:
            path = self.export_dir / f"{doc_id}.txt"
            if not path.exists():
                continue
            self._state[doc_id] = "done"
            parsed = parse_annotation_text(doc_id, path.read_text(encoding="utf-8"))
            for sentence in parsed.sentences:
                self._histogram[sentence.label.token] += 1

    def _reclaim_expired(self) -> None:
        now = self._clock()
        for doc_id, state in self._state.items():
            if isinstance(state, tuple) and state[2] <= now:
                self._state[doc_id] = "pending"

    def _checkout(self, doc_id: str, session_id: str) -> None:
        self._state[doc_id] = ("out", session_id, self._clock() + self.lease_seconds)

    def _active_session(self, session_id: str) -> _Session:
        session = self._sessions.get(session_id)
        if session is None:
            raise UnknownSession(f"no session {session_id!r}")
        if session.status != "InProgress" or session.doc_id is None:
            raise UnknownSession(f"session {session_id!r} is complete")
        state = self._state.get(session.doc_id)
        if not (isinstance(state, tuple) and state[1] == session_id and state[2] > self._clock()):
            raise UnknownSession(f"session {session_id!r} lease on {session.doc_id!r} expired")
        return session

    def _doc_payload(self, doc_id: str) -> dict:
        return {
            "doc_id": doc_id,
            "sentences": [
                {"index": i, "text": text}
                for i, text in enumerate(self._sentences[doc_id])
            ],
        }

    # -- API operations

    def start_session(self, annotator_id: str) -> dict:
        with self._lock:
            self._reclaim_expired()
            doc_id = next((d for d in self._order if self._state[d] == "pending"), None)
            if doc_id is None:
                raise QueueEmpty("no pending resumes")
            session_id = f"s{self._next_session:06d}"
            self._next_session += 1
            session = _Session(session_id=session_id, annotator_id=annotator_id, doc_id=doc_id)
            self._sessions[session_id] = session
            self._checkout(doc_id, session_id)
            return {
                "session_id": session_id,
                "labels": list(LABEL_TOKENS),
                **self._doc_payload(doc_id),
            }

    def session_state(self, session_id: str) -> dict:
        """Read-only snapshot so a reloaded client can resume losslessly."""
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                raise UnknownSession(f"no session {session_id!r}")
            payload = {
                "session_id": session.session_id,
                "annotator_id": session.annotator_id,
                "status": session.status,
                "labels": list(LABEL_TOKENS),
                "assigned": {str(i): tok for i, tok in sorted(session.labels.items())},
                "exported": list(session.exported),
            }
            if session.doc_id is not None:
                payload.update(self._doc_payload(session.doc_id))
            else:
                payload.update({"doc_id": None, "sentences": []})
            return payload

    def submit_label(self, session_id: str, index: int, label_token: str) -> None:
        with self._lock:
            session = self._active_session(session_id)
            texts = self._sentences[session.doc_id]
            if not 0 <= index < len(texts):
                raise IndexOutOfRange(f"index {index} outside 0..{len(texts) - 1}")
            label = parse_label(label_token)  # UnknownLabel on bad token
            session.labels[index] = label.token
            self._checkout(session.doc_id, session_id)  # renew lease

    def complete_resume(self, session_id: str) -> tuple[Path, dict | None]:
        with self._lock:
            session = self._active_session(session_id)
            doc_id = session.doc_id
            texts = self._sentences[doc_id]
            unlabeled = [i for i in range(len(texts)) if i not in session.labels]
            if unlabeled:
                raise IncompleteAnnotation(unlabeled)
            afile = ResumeAnnotationFile(
                doc_id=doc_id,
                sentences=[
                    AnnotatedSentence(doc_id, i, text, parse_label(session.labels[i]))
                    for i, text in enumerate(texts)
                ],
            )
            path = self.export_dir / f"{doc_id}.txt"
            write_annotation_file(afile, path)
            self._state[doc_id] = "done"
            for sentence in afile.sentences:
                self._histogram[sentence.label.token] += 1
            session.exported.append(doc_id)
            session.labels = {}
            self._reclaim_expired()
            next_doc = next((d for d in self._order if self._state[d] == "pending"), None)
            if next_doc is None:
                session.doc_id = None
                session.status = "Complete"
                return path, None
            session.doc_id = next_doc
            self._checkout(next_doc, session_id)
            return path, self._doc_payload(next_doc)

    def progress(self) -> dict:
        """Snapshot without mutation; expired leases count as pending."""
        with self._lock:
            now = self._clock()
            counts = {"pending": 0, "checked_out": 0, "done": 0}
            for doc_id in self._order:
                state = self._state[doc_id]
                if state == "done":
                    counts["done"] += 1
                elif isinstance(state, tuple) and state[2] > now:
                    counts["checked_out"] += 1
                else:
                    counts["pending"] += 1
            return {
                "counts": counts,
                "total": len(self._order),
                "histogram": dict(self._histogram),
            }


# --- document loading ----------------------------------------------------------

def load_queue_docs(input_dir: Path, seg_config=None) -> list[tuple[str, list[str]]]:
    """Ingest and segment every supported resume under ``input_dir``
    (sorted by doc_id); documents that segment to zero sentences are
    skipped: there is nothing to label."""
    from .ingest import ingest_directory
    from .segmenter import SegmentationConfig, segment

    seg_config = seg_config or SegmentationConfig()
    docs, _ = ingest_directory(Path(input_dir))
    queue = []
    for doc in docs:
        texts = [s.text for s in segment(doc, seg_config)]
        if texts:
            queue.append((doc.doc_id, texts))
    return queue


# --- HTTP layer ----------------------------------------------------------------

_STATUS_BY_CODE = {
    UnknownSession.code: 404,
    IndexOutOfRange.code: 400,
    "unknown-label": 400,
    "format-error": 400,
    IncompleteAnnotation.code: 409,
    QueueEmpty.code: 409,
}


# request bodies live at module scope: route annotations are resolved
# against module globals, so locally defined models would not bind
class StartBody(BaseModel):
    annotator_id: str


class LabelBody(BaseModel):
    index: int
    label: str


def create_app(engine: AnnotationEngine, ui_dir: Path | None = None):
    """FastAPI app over an engine; serves the UI bundle at / if present."""
    from fastapi import FastAPI, Request
    from fastapi.responses import JSONResponse

    app = FastAPI(title="resume annotation service")
    app.state.engine = engine

    @app.exception_handler(WorkbenchError)
    async def _workbench_error(request: Request, exc: WorkbenchError):
        status = _STATUS_BY_CODE.get(exc.code, 400)
        payload = {"error": exc.code, "detail": str(exc)}
        if isinstance(exc, IncompleteAnnotation):
            payload["unlabeled"] = exc.unlabeled
        return JSONResponse(status_code=status, content=payload)

    @app.post("/api/sessions")
    def start_session(body: StartBody):
        return engine.start_session(body.annotator_id)

    @app.get("/api/sessions/{session_id}")
    def session_state(session_id: str):
        return engine.session_state(session_id)

    @app.post("/api/sessions/{session_id}/labels")
    def submit_label(session_id: str, body: LabelBody):
        engine.submit_label(session_id, body.index, body.label)
        return {"ok": True}

    @app.post("/api/sessions/{session_id}/complete")
    def complete(session_id: str):
        path, next_doc = engine.complete_resume(session_id)
        return {"exported": str(path), "next": next_doc}

    @app.get("/api/progress")
    def progress():
        return engine.progress()

    if ui_dir is not None and Path(ui_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(ui_dir), html=True), name="ui")

    return app


def serve(
    input_dir: Path,
    export_dir: Path,
    host: str = "127.0.0.1",
    port: int = 8000,
    lease_seconds: float = DEFAULT_LEASE_SECONDS,
    ui_dir: Path | None = None,
    seg_config=None,
) -> None:
    import uvicorn

    engine = AnnotationEngine(load_queue_docs(input_dir, seg_config), export_dir, lease_seconds)
    app = create_app(engine, ui_dir=ui_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
