/**
 * Controller wiring the API client, pure state, and DOM view together.
 *
 * Label submissions are serialized through a promise chain: at most one
 * request is in flight and queued presses resolve their target row at
 * execution time, so rapid keyboard use labels consecutive sentences.
 * Completing a resume auto-advances into the next document under the
 * same session, or shows the terminal screen once the queue drains.
 */
import { ApiError, type ApiClient } from "./api";
import { tokenForKey, type LabelToken } from "./labels";
import {
  allLabeled,
  cursorOf,
  fromDoc,
  fromSnapshot,
  fromStart,
  withCursor,
  withLabel,
  withMissing,
  type Session,
} from "./state";
import { render } from "./view";

export interface AppOptions {
  root: HTMLElement;
  api: ApiClient;
  annotatorId?: string;
  /** Where the session id survives a reload; per-tab by design. */
  storage?: Pick<Storage, "getItem" | "setItem" | "removeItem">;
}

const SESSION_KEY = "rcw.session";

export class App {
  private session: Session | null = null;
  private drained = false;
  private toast: string | null = null;
  private progress: { done: number; total: number } | null = null;
  private queue: Promise<void> = Promise.resolve();
  private keyHandler: ((e: KeyboardEvent) => void) | null = null;

  private readonly root: HTMLElement;
  private readonly api: ApiClient;
  private readonly annotatorId: string;
  private readonly storage: AppOptions["storage"];

  constructor(opts: AppOptions) {
    this.root = opts.root;
    this.api = opts.api;
    this.annotatorId = opts.annotatorId ?? "anonymous";
    this.storage = opts.storage;
  }

  async boot(): Promise<void> {
    this.keyHandler = (e) => this.onKey(e);
    this.root.ownerDocument.addEventListener("keydown", this.keyHandler);
    try {
      await this.resumeOrStart();
      await this.refreshProgress();
    } catch (err) {
      this.toast = describeError(err);
    }
    this.draw();
  }

  /** Detach listeners; a simulated reload must not leave the old app live. */
  destroy(): void {
    if (this.keyHandler) {
      this.root.ownerDocument.removeEventListener("keydown", this.keyHandler);
      this.keyHandler = null;
    }
  }

  private async resumeOrStart(): Promise<void> {
    const saved = this.storage?.getItem(SESSION_KEY) ?? null;
    if (saved) {
      try {
        const restored = fromSnapshot(await this.api.sessionState(saved));
        if (restored) {
          this.session = restored;
          return;
        }
      } catch (err) {
        // stale or unknown session after a restart: start over
        if (!(err instanceof ApiError)) throw err;
      }
      this.storage?.removeItem(SESSION_KEY);
    }
    await this.startFresh();
  }

  private async startFresh(): Promise<void> {
    try {
      const payload = await this.api.startSession(this.annotatorId);
      this.session = fromStart(payload);
      this.storage?.setItem(SESSION_KEY, payload.session_id);
    } catch (err) {
      if (err instanceof ApiError && err.code === "queue-empty") {
        this.drained = true;
        return;
      }
      throw err;
    }
  }

  private onKey(e: KeyboardEvent): void {
    if (e.defaultPrevented || e.altKey || e.ctrlKey || e.metaKey) return;
    const token = tokenForKey(e.key);
    if (token) {
      e.preventDefault();
      this.enqueueLabel(token);
      return;
    }
    if (e.key === "Enter" && this.session && allLabeled(this.session)) {
      e.preventDefault();
      this.enqueueComplete();
    }
  }

  private enqueueLabel(token: LabelToken): void {
    this.queue = this.queue.then(() => this.submit(token));
  }

  private enqueueComplete(): void {
    this.queue = this.queue.then(() => this.completeCurrent());
  }

  private moveCursor(index: number): void {
    if (!this.session) return;
    this.session = withCursor(this.session, index);
    this.draw();
  }

  private async submit(token: LabelToken): Promise<void> {
    const session = this.session;
    if (!session) return;
    const index = cursorOf(session);
    if (index === null) return;
    try {
      await this.api.submitLabel(session.sessionId, index, token);
      this.session = withLabel(session, index, token);
      this.toast = null;
    } catch (err) {
      // surface the failure and keep the cursor where it was
      this.toast = describeError(err);
    }
    this.draw();
  }

  private async completeCurrent(): Promise<void> {
    const session = this.session;
    if (!session) return;
    try {
      const result = await this.api.complete(session.sessionId);
      if (result.next) {
        this.session = fromDoc(session.sessionId, result.next);
      } else {
        this.session = null;
        this.drained = true;
        this.storage?.removeItem(SESSION_KEY);
      }
      this.toast = null;
    } catch (err) {
      if (err instanceof ApiError && err.code === "incomplete-annotation") {
        this.session = withMissing(session, err.unlabeled);
      }
      this.toast = describeError(err);
    }
    await this.refreshProgress();
    this.draw();
  }

  private async refreshProgress(): Promise<void> {
    try {
      const p = await this.api.progress();
      this.progress = { done: p.counts.done, total: p.total };
    } catch {
      // progress is decoration; never fail an action over it
    }
  }

  private draw(): void {
    render(
      this.root,
      {
        session: this.session,
        drained: this.drained,
        toast: this.toast,
        progress: this.progress,
      },
      {
        onLabel: (token) => this.enqueueLabel(token),
        onRowClick: (index) => this.moveCursor(index),
        onComplete: () => this.enqueueComplete(),
      },
    );
  }
}

function describeError(err: unknown): string {
  if (err instanceof ApiError) return `${err.code}: ${err.message}`;
  return err instanceof Error ? err.message : String(err);
}
