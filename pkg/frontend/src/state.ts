/** View state and its round trip through the URL fragment.
 *
 * Everything needed to reproduce a view (projection name, color-by field,
 * lasso polygon) lives in the fragment; the selection id set is derived
 * from the polygon against the loaded projection, never stored.
 */

import type { Vertex } from "./geometry.js";

export interface ViewState {
  projection: string;
  colorBy: string; // "cohort", "confidence", or "label:<name>"
  polygon: Vertex[];
}

export const DEFAULT_STATE: ViewState = {
  projection: "main",
  colorBy: "cohort",
  polygon: [],
};

/** Serialize to a fragment like "p=main&c=cohort&poly=1.5,2;3,4;5,-1". */
export function encodeFragment(state: ViewState): string {
  const parts = [
    `p=${encodeURIComponent(state.projection)}`,
    `c=${encodeURIComponent(state.colorBy)}`,
  ];
  if (state.polygon.length > 0) {
    const poly = state.polygon.map(([x, y]) => `${x},${y}`).join(";");
    parts.push(`poly=${encodeURIComponent(poly)}`);
  }
  return parts.join("&");
}

export function decodeFragment(fragment: string): ViewState {
  const cleaned = fragment.startsWith("#") ? fragment.slice(1) : fragment;
  const state: ViewState = { ...DEFAULT_STATE, polygon: [] };
  if (!cleaned) return state;
  for (const part of cleaned.split("&")) {
    const eq = part.indexOf("=");
    if (eq < 0) continue;
    const key = part.slice(0, eq);
    const value = decodeURIComponent(part.slice(eq + 1));
    if (key === "p" && value) state.projection = value;
    else if (key === "c" && value) state.colorBy = value;
    else if (key === "poly" && value) {
      const vertices: Vertex[] = [];
      for (const pair of value.split(";")) {
        const [xs, ys] = pair.split(",");
        const x = Number(xs);
        const y = Number(ys);
        if (Number.isFinite(x) && Number.isFinite(y)) vertices.push([x, y]);
      }
      state.polygon = vertices;
    }
  }
  return state;
}

/** Selections must stay subsets of the loaded projection's ids. */
export function restrictSelection(ids: string[], known: ReadonlySet<string>): string[] {
  return ids.filter((id) => known.has(id));
}
