import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";

import { describe, expect, it } from "vitest";

import { selectInPolygon, type Vertex } from "../src/geometry.js";

interface Fixture {
  points: Array<{ id: string; x: number; y: number }>;
  polygon: Array<[number, number]>;
  expected_ids: string[];
}

const here = dirname(fileURLToPath(import.meta.url));
const fixture: Fixture = JSON.parse(
  readFileSync(join(here, "fixtures", "lasso_fixture.json"), "utf-8"),
);

describe("lasso fidelity (2000-point fixture)", () => {
  // expected_ids were computed by the server-side even-odd evaluation;
  // the client implementation must reproduce the set exactly
  it("matches the server polygon evaluation exactly", () => {
    const vertices = fixture.polygon.map(([x, y]) => [x, y] as Vertex);
    const ids = selectInPolygon(fixture.points, { vertices, closed: true });
    expect(fixture.points.length).toBe(2000);
    expect(ids).toEqual(fixture.expected_ids);
  });

  it("selection count is displayed material: non-trivial subset", () => {
    expect(fixture.expected_ids.length).toBeGreaterThan(0);
    expect(fixture.expected_ids.length).toBeLessThan(fixture.points.length);
  });
});
