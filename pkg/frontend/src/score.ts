// Scoring model shared by the task view and the submit path. The displayed
// score must always equal what the backend recomputes: the count of checked
// criteria.

export type Criteria = Record<string, boolean>;

export interface CriterionInfo {
  key: string;
  label: string;
}

// Fallback order; the authoritative keys and labels come from GET /meta.
export const CRITERIA_KEYS = [
  'layout_normal',
  'styling_normal',
  'no_excess_blank',
  'rich_color',
  'aesthetic',
] as const;

export function emptyCriteria(keys: readonly string[] = CRITERIA_KEYS): Criteria {
  const out: Criteria = {};
  for (const key of keys) out[key] = false;
  return out;
}

export function scoreOf(criteria: Criteria): number {
  return Object.values(criteria).filter(Boolean).length;
}

export function toggle(criteria: Criteria, key: string): Criteria {
  if (!(key in criteria)) return criteria;
  return { ...criteria, [key]: !criteria[key] };
}

/** Map the 1-9 digit row onto criterion indexes for keyboard shortcuts. */
export function keyForDigit(digit: number, keys: readonly string[]): string | null {
  if (digit < 1 || digit > keys.length) return null;
  return keys[digit - 1];
}
