/** Headless interaction flows shared by the app and its tests.
 *
 * Relabeling is never optimistic: the flow waits for the server
 * acknowledgment, then refetches metrics, so the panel always shows
 * numbers the server actually computed (before/after, same b and seed).
 */

import type { Client, MetricsResponse, RelabelResponse } from "./api.js";

export interface MetricsConfig {
  label: string;
  reference: string;
  b: number;
  seed: number;
}

export interface RelabelDraft {
  ids: string[];
  labelName: string;
  value: string;
  author: string;
  note?: string | null;
}

export interface RelabelOutcome {
  before: MetricsResponse;
  ack: RelabelResponse;
  after: MetricsResponse;
}

export async function relabelFlow(
  client: Client,
  draft: RelabelDraft,
  metrics: MetricsConfig,
): Promise<RelabelOutcome> {
  if (draft.ids.length === 0) {
    throw new Error("selection is empty");
  }
  const before = await client.accuracy(metrics.label, metrics.reference, metrics.b, metrics.seed);
  const ack = await client.relabel({
    ids: draft.ids,
    label_name: draft.labelName,
    value: draft.value,
    author: draft.author,
    note: draft.note ?? null,
  });
  const after = await client.accuracy(metrics.label, metrics.reference, metrics.b, metrics.seed);
  return { before, ack, after };
}

/** Histogram of current values for one label over a selection. */
export function labelHistogram(
  points: ReadonlyArray<{ id: string; labels: Record<string, string> }>,
  ids: ReadonlySet<string>,
  labelName: string,
): Map<string, number> {
  const hist = new Map<string, number>();
  for (const p of points) {
    if (!ids.has(p.id)) continue;
    const value = p.labels[labelName] ?? "(unset)";
    hist.set(value, (hist.get(value) ?? 0) + 1);
  }
  return hist;
}
