/** Lasso-selection geometry.
 *
 * The even-odd crossing test is written with exactly the arithmetic the
 * server uses, expression for expression, so a selection evaluated here
 * equals the server-side evaluation bit for bit on the same doubles:
 *
 *   ((yi > y) !== (yj > y)) && (x < (xj - xi) * (y - yi) / (yj - yi) + xi)
 */

export type Vertex = readonly [number, number];

export interface SelectionPolygon {
  vertices: Vertex[];
  closed: boolean;
}

/** Even-odd rule for one point against a closed polygon. */
export function pointInPolygon(x: number, y: number, vertices: readonly Vertex[]): boolean {
  let inside = false;
  let j = vertices.length - 1;
  for (let i = 0; i < vertices.length; i++) {
    const [xi, yi] = vertices[i];
    const [xj, yj] = vertices[j];
    if (yi > y !== yj > y && x < ((xj - xi) * (y - yi)) / (yj - yi) + xi) {
      inside = !inside;
    }
    j = i;
  }
  return inside;
}

/** Ids whose coordinates fall inside the closed polygon, in input order. */
export function selectInPolygon(
  points: ReadonlyArray<{ id: string; x: number; y: number }>,
  polygon: SelectionPolygon,
): string[] {
  if (!polygon.closed) {
    throw new Error("polygon must be closed before selecting");
  }
  if (polygon.vertices.length < 3) {
    throw new Error("polygon needs at least 3 vertices");
  }
  const out: string[] = [];
  for (const p of points) {
    if (pointInPolygon(p.x, p.y, polygon.vertices)) out.push(p.id);
  }
  return out;
}
