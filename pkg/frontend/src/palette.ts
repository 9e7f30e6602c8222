/** Color assignment for the scatter view.
 *
 * Categorical colors key off a hash of the category name, never off
 * insertion order, so palettes are stable across refreshes and datasets.
 */

const CATEGORICAL = [
  "#1f77b4",
  "#ff7f0e",
  "#2ca02c",
  "#d62728",
  "#9467bd",
  "#8c564b",
  "#e377c2",
  "#7f7f7f",
  "#bcbd22",
  "#17becf",
];

/** FNV-1a over the UTF-16 code units; deterministic across sessions. */
export function hashName(name: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < name.length; i++) {
    h ^= name.charCodeAt(i);
    h = Math.imul(h, 0x01000193) >>> 0;
  }
  return h >>> 0;
}

export function colorForCategory(name: string): string {
  return CATEGORICAL[hashName(name) % CATEGORICAL.length];
}

/** Blue-to-red ramp for confidence in [0, 1]; grey for missing values. */
export function colorForValue(value: number | null, lo: number, hi: number): string {
  if (value === null || Number.isNaN(value)) return "#b0b0b0";
  const span = hi - lo;
  const t = span > 0 ? Math.min(1, Math.max(0, (value - lo) / span)) : 0.5;
  const r = Math.round(40 + t * 200);
  const g = Math.round(70 + (1 - Math.abs(t - 0.5) * 2) * 110);
  const b = Math.round(240 - t * 200);
  return `rgb(${r},${g},${b})`;
}
