/**
 * DOM renderers. The whole interface is redrawn from the model on every
 * state change; the lists involved are small enough that diffing would
 * be overkill. Layout: sentences on the left, label buttons on the right.
 */
import { LABELS, type LabelToken } from "./labels";
import { allLabeled, cursorOf, type Session } from "./state";

export interface Handlers {
  onLabel(token: LabelToken): void;
  onRowClick(index: number): void;
  onComplete(): void;
}

export interface RenderState {
  session: Session | null;
  /** Queue empty: show the terminal screen instead of an annotation pane. */
  drained: boolean;
  toast: string | null;
  progress: { done: number; total: number } | null;
}

export function render(root: HTMLElement, rs: RenderState, handlers: Handlers): void {
  const doc = root.ownerDocument;
  root.textContent = "";
  root.append(renderHeader(doc, rs));
  if (rs.drained) {
    root.append(renderTerminal(doc));
  } else if (rs.session) {
    const layout = el(doc, "div", { class: "layout" });
    layout.append(
      renderSentences(doc, rs.session, handlers),
      renderControls(doc, rs.session, handlers),
    );
    root.append(layout);
  } else {
    root.append(el(doc, "p", { class: "placeholder" }, "Loading..."));
  }
  if (rs.toast) {
    root.append(el(doc, "div", { id: "toast", role: "alert" }, rs.toast));
  }
}

function renderHeader(doc: Document, rs: RenderState): HTMLElement {
  const header = el(doc, "header", {});
  header.append(el(doc, "h1", {}, "Resume annotation"));
  header.append(el(doc, "span", { id: "doc-id" }, rs.session ? rs.session.docId : ""));
  const progress = rs.progress ? `${rs.progress.done}/${rs.progress.total} exported` : "";
  header.append(el(doc, "span", { id: "progress", role: "status" }, progress));
  return header;
}

function renderSentences(doc: Document, session: Session, handlers: Handlers): HTMLElement {
  const cursor = cursorOf(session);
  const list = el(doc, "ol", { id: "sentences" });
  for (const row of session.sentences) {
    const classes = ["row"];
    if (row.index === cursor) classes.push("cursor");
    if (session.missing.includes(row.index)) classes.push("missing");
    const item = el(doc, "li", { class: classes.join(" "), "data-index": String(row.index) });
    item.append(el(doc, "span", { class: "num" }, String(row.index + 1)));
    item.append(el(doc, "span", { class: "text" }, row.text));
    if (row.label !== null) {
      item.append(el(doc, "span", { class: "badge" }, row.label));
    }
    item.addEventListener("click", () => handlers.onRowClick(row.index));
    list.append(item);
  }
  return list;
}

function renderControls(doc: Document, session: Session, handlers: Handlers): HTMLElement {
  const aside = el(doc, "aside", { id: "controls" });
  const buttons = el(doc, "div", { id: "buttons" });
  LABELS.forEach((label, i) => {
    const btn = el(doc, "button", {
      type: "button",
      class: "label-btn",
      "data-token": label.token,
    });
    btn.append(el(doc, "kbd", {}, String(i + 1)), doc.createTextNode(" " + label.name));
    btn.addEventListener("click", () => handlers.onLabel(label.token));
    buttons.append(btn);
  });
  aside.append(buttons);

  const complete = el(doc, "button", { type: "button", id: "complete" }, "Complete & next");
  if (!allLabeled(session)) (complete as HTMLButtonElement).disabled = true;
  complete.addEventListener("click", () => handlers.onComplete());
  aside.append(complete);
  return aside;
}

function renderTerminal(doc: Document): HTMLElement {
  const section = el(doc, "section", { id: "terminal" });
  section.append(el(doc, "h2", {}, "Queue empty"));
  section.append(el(doc, "p", {}, "Every resume has been annotated and exported."));
  return section;
}

function el(
  doc: Document,
  tag: string,
  attrs: Record<string, string> = {},
  ...children: (Node | string)[]
): HTMLElement {
  const node = doc.createElement(tag);
  for (const [key, value] of Object.entries(attrs)) node.setAttribute(key, value);
  node.append(...children);
  return node;
}
