/**
 * Pure session state. Labels shown here are always server-acknowledged:
 * the controller applies a label only after the submit succeeds, so there
 * is nothing optimistic to roll back.
 */
import type { DocPayload, SessionStatePayload, StartPayload } from "./api";
import { isLabelToken, type LabelToken } from "./labels";

export interface SentenceRow {
  index: number;
  text: string;
  label: LabelToken | null;
}

export interface Session {
  sessionId: string;
  docId: string;
  sentences: SentenceRow[];
  /** Manual cursor placement from a row click; cleared by the next ack. */
  override: number | null;
  /** Rows a rejected complete reported as unlabeled. */
  missing: number[];
}

export function lowestUnlabeled(sentences: readonly SentenceRow[]): number | null {
  for (const row of sentences) {
    if (row.label === null) return row.index;
  }
  return null;
}

/** Where the next label lands: manual placement wins, else first unlabeled. */
export function cursorOf(session: Session): number | null {
  if (session.override !== null) return session.override;
  return lowestUnlabeled(session.sentences);
}

export function allLabeled(session: Session): boolean {
  return session.sentences.every((row) => row.label !== null);
}

export function fromDoc(sessionId: string, doc: DocPayload): Session {
  return {
    sessionId,
    docId: doc.doc_id,
    sentences: doc.sentences.map((s) => ({ index: s.index, text: s.text, label: null })),
    override: null,
    missing: [],
  };
}

export function fromStart(payload: StartPayload): Session {
  return fromDoc(payload.session_id, payload);
}

/**
 * Rebuild a session from the GET snapshot after a page reload.
 * Returns null when the session is finished or holds no document,
 * in which case the caller should start fresh.
 */
export function fromSnapshot(payload: SessionStatePayload): Session | null {
  if (payload.status !== "InProgress" || payload.doc_id === null) return null;
  const assigned = new Map<number, LabelToken>();
  for (const [key, token] of Object.entries(payload.assigned)) {
    if (isLabelToken(token)) assigned.set(Number(key), token);
  }
  return {
    sessionId: payload.session_id,
    docId: payload.doc_id,
    sentences: payload.sentences.map((s) => ({
      index: s.index,
      text: s.text,
      label: assigned.get(s.index) ?? null,
    })),
    override: null,
    missing: [],
  };
}

/** Apply an acknowledged label; clears the manual cursor and the row's missing flag. */
export function withLabel(session: Session, index: number, token: LabelToken): Session {
  return {
    ...session,
    sentences: session.sentences.map((row) =>
      row.index === index ? { ...row, label: token } : row,
    ),
    override: null,
    missing: session.missing.filter((i) => i !== index),
  };
}

export function withCursor(session: Session, index: number): Session {
  if (!session.sentences.some((row) => row.index === index)) return session;
  return { ...session, override: index };
}

export function withMissing(session: Session, unlabeled: readonly number[]): Session {
  return { ...session, missing: [...unlabeled] };
}
