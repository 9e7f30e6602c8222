import { describe, expect, it } from "vitest";

import type { Client, MetricsResponse, RelabelResponse } from "../src/api.js";
import { labelHistogram, relabelFlow } from "../src/flows.js";

function metrics(point: number, seq: number): MetricsResponse {
  return {
    label_name: "m",
    reference: "m_clean",
    accuracy: { point, ci: [point - 0.02, point + 0.02], n: 100, b: 400, seed: 2 },
    seq,
  };
}

/** Fake server: accuracy improves once the relabel lands. */
function fakeClient(log: string[]): Client {
  let seq = 0;
  return {
    accuracy: async () => {
      log.push(`accuracy@${seq}`);
      return metrics(seq === 0 ? 0.87 : 0.93, seq);
    },
    relabel: async (req): Promise<RelabelResponse> => {
      log.push("relabel");
      seq += 1;
      return {
        seq,
        action: {
          seq,
          ids: [...req.ids].sort(),
          label_name: req.label_name,
          value: req.value,
          author: req.author,
          timestamp: "t",
          note: req.note ?? null,
        },
      };
    },
  } as unknown as Client;
}

describe("relabelFlow", () => {
  it("fetches before, waits for the ack, then fetches after", async () => {
    const log: string[] = [];
    const outcome = await relabelFlow(
      fakeClient(log),
      { ids: ["a", "b"], labelName: "m", value: "ce", author: "op" },
      { label: "m", reference: "m_clean", b: 400, seed: 2 },
    );
    expect(log).toEqual(["accuracy@0", "relabel", "accuracy@1"]);
    expect(outcome.before.accuracy.point).toBeCloseTo(0.87);
    expect(outcome.after.accuracy.point).toBeCloseTo(0.93);
    expect(outcome.after.seq).toBe(1);
    expect(outcome.ack.action.ids).toEqual(["a", "b"]);
  });

  it("rejects empty selections before touching the server", async () => {
    const log: string[] = [];
    await expect(
      relabelFlow(
        fakeClient(log),
        { ids: [], labelName: "m", value: "ce", author: "op" },
        { label: "m", reference: "m_clean", b: 400, seed: 2 },
      ),
    ).rejects.toThrow(/empty/);
    expect(log).toEqual([]);
  });
});

describe("labelHistogram", () => {
  it("counts selected label values", () => {
    const points = [
      { id: "a", labels: { m: "ce" } },
      { id: "b", labels: { m: "wl" } },
      { id: "c", labels: { m: "ce" } },
      { id: "d", labels: {} },
    ];
    const hist = labelHistogram(points, new Set(["a", "b", "c", "d"]), "m");
    expect(hist.get("ce")).toBe(2);
    expect(hist.get("wl")).toBe(1);
    expect(hist.get("(unset)")).toBe(1);
  });
});
