/**
 * The seven sentence labels in canonical order. Button layout, keyboard
 * shortcuts 1-7, and the server's label tokens all follow this list; the
 * order must match the service or shortcuts would label the wrong class.
 */
export const LABELS = [
  { token: "EXPERIENCE", name: "Experience" },
  { token: "PI", name: "Personal Information" },
  { token: "SUMMARY", name: "Summary" },
  { token: "EDUCATION", name: "Education" },
  { token: "QUALIFICATION", name: "Qualification" },
  { token: "SKILL", name: "Skill" },
  { token: "OBJECT", name: "Object" },
] as const;

export type LabelToken = (typeof LABELS)[number]["token"];

const BY_KEY = new Map<string, LabelToken>(LABELS.map((l, i) => [String(i + 1), l.token]));

/** Keyboard shortcut lookup: "1".."7" -> token, anything else -> null. */
export function tokenForKey(key: string): LabelToken | null {
  return BY_KEY.get(key) ?? null;
}

export function isLabelToken(value: string): value is LabelToken {
  return LABELS.some((l) => l.token === value);
}
