/** Canvas scatter view: pan/zoom, hover, and freehand lasso drawing.
 *
 * Rendering works in data coordinates through a linear view transform;
 * the lasso polygon is kept in data coordinates so the selection can be
 * re-evaluated identically after any amount of panning or zooming.
 */

import type { ProjectionPoint } from "./api.js";
import type { Vertex } from "./geometry.js";
import { colorForCategory, colorForValue } from "./palette.js";

export type ColorBy = string; // "cohort" | "confidence" | "label:<name>"

export interface ScatterCallbacks {
  onLasso(polygon: Vertex[]): void;
  onHover(point: ProjectionPoint | null): void;
}

interface Transform {
  scale: number;
  tx: number;
  ty: number;
}

export class ScatterView {
  private ctx: CanvasRenderingContext2D;
  private points: ProjectionPoint[] = [];
  private colorBy: ColorBy = "cohort";
  private transform: Transform = { scale: 1, tx: 0, ty: 0 };
  private selection = new Set<string>();
  private polygon: Vertex[] = [];
  private drawing = false;
  private panning: { x: number; y: number } | null = null;
  private confRange: [number, number] = [0, 1];

  constructor(
    readonly canvas: HTMLCanvasElement,
    private callbacks: ScatterCallbacks,
  ) {
    const ctx = canvas.getContext("2d");
    if (!ctx) throw new Error("canvas 2d context unavailable");
    this.ctx = ctx;
    canvas.addEventListener("pointerdown", (e) => this.pointerDown(e));
    canvas.addEventListener("pointermove", (e) => this.pointerMove(e));
    canvas.addEventListener("pointerup", (e) => this.pointerUp(e));
    canvas.addEventListener("pointerleave", () => this.pointerCancel());
    canvas.addEventListener("wheel", (e) => this.wheel(e), { passive: false });
  }

  setPoints(points: ProjectionPoint[]): void {
    this.points = points;
    const confs = points
      .map((p) => p.confidence)
      .filter((c): c is number => c !== null && !Number.isNaN(c));
    this.confRange =
      confs.length > 0 ? [Math.min(...confs), Math.max(...confs)] : [0, 1];
    this.fit();
    this.render();
  }

  setColorBy(colorBy: ColorBy): void {
    this.colorBy = colorBy;
    this.render();
  }

  setSelection(ids: Iterable<string>): void {
    this.selection = new Set(ids);
    this.render();
  }

  setPolygon(polygon: Vertex[]): void {
    this.polygon = polygon;
    this.render();
  }

  categories(): string[] {
    const seen: string[] = [];
    for (const p of this.points) {
      const cat = this.categoryOf(p);
      if (cat !== null && !seen.includes(cat)) seen.push(cat);
    }
    return seen;
  }

  private categoryOf(p: ProjectionPoint): string | null {
    if (this.colorBy === "cohort") return p.cohort;
    if (this.colorBy.startsWith("label:")) {
      return p.labels[this.colorBy.slice(6)] ?? "(unset)";
    }
    return null; // continuous
  }

  private colorOf(p: ProjectionPoint): string {
    if (this.colorBy === "confidence") {
      return colorForValue(p.confidence, this.confRange[0], this.confRange[1]);
    }
    const cat = this.categoryOf(p);
    return cat === null ? "#666" : colorForCategory(cat);
  }

  private fit(): void {
    if (this.points.length === 0) return;
    const xs = this.points.map((p) => p.x);
    const ys = this.points.map((p) => p.y);
    const [minX, maxX] = [Math.min(...xs), Math.max(...xs)];
    const [minY, maxY] = [Math.min(...ys), Math.max(...ys)];
    const w = this.canvas.width;
    const h = this.canvas.height;
    const pad = 24;
    const spanX = Math.max(maxX - minX, 1e-9);
    const spanY = Math.max(maxY - minY, 1e-9);
    const scale = Math.min((w - 2 * pad) / spanX, (h - 2 * pad) / spanY);
    this.transform = {
      scale,
      tx: w / 2 - scale * (minX + maxX) / 2,
      ty: h / 2 + scale * (minY + maxY) / 2,
    };
  }

  private toScreen(x: number, y: number): [number, number] {
    const t = this.transform;
    return [t.scale * x + t.tx, -t.scale * y + t.ty];
  }

  private toData(sx: number, sy: number): [number, number] {
    const t = this.transform;
    return [(sx - t.tx) / t.scale, -(sy - t.ty) / t.scale];
  }

  render(): void {
    const { ctx, canvas } = this;
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    if (this.points.length === 0) {
      ctx.fillStyle = "#777";
      ctx.font = "14px sans-serif";
      ctx.textAlign = "center";
      ctx.fillText("no projection loaded", canvas.width / 2, canvas.height / 2);
      return;
    }
    for (const p of this.points) {
      const [sx, sy] = this.toScreen(p.x, p.y);
      ctx.beginPath();
      ctx.arc(sx, sy, this.selection.has(p.id) ? 4 : 2.5, 0, Math.PI * 2);
      ctx.fillStyle = this.colorOf(p);
      ctx.globalAlpha = this.selection.size === 0 || this.selection.has(p.id) ? 0.9 : 0.25;
      ctx.fill();
      if (this.selection.has(p.id)) {
        ctx.globalAlpha = 1;
        ctx.strokeStyle = "#111";
        ctx.lineWidth = 0.8;
        ctx.stroke();
      }
    }
    ctx.globalAlpha = 1;
    if (this.polygon.length >= 2) {
      ctx.beginPath();
      const [x0, y0] = this.toScreen(...this.polygon[0]);
      ctx.moveTo(x0, y0);
      for (const [px, py] of this.polygon.slice(1)) {
        const [sx, sy] = this.toScreen(px, py);
        ctx.lineTo(sx, sy);
      }
      if (!this.drawing) ctx.closePath();
      ctx.strokeStyle = "#d62728";
      ctx.lineWidth = 1.5;
      ctx.setLineDash([5, 3]);
      ctx.stroke();
      ctx.setLineDash([]);
    }
  }

  private pointerDown(e: PointerEvent): void {
    this.canvas.setPointerCapture(e.pointerId);
    if (e.shiftKey || e.button === 2) {
      this.panning = { x: e.offsetX, y: e.offsetY };
      return;
    }
    this.drawing = true;
    this.polygon = [this.toData(e.offsetX, e.offsetY)];
  }

  private pointerMove(e: PointerEvent): void {
    if (this.panning) {
      this.transform.tx += e.offsetX - this.panning.x;
      this.transform.ty += e.offsetY - this.panning.y;
      this.panning = { x: e.offsetX, y: e.offsetY };
      this.render();
      return;
    }
    if (this.drawing) {
      this.polygon.push(this.toData(e.offsetX, e.offsetY));
      this.render();
      return;
    }
    this.callbacks.onHover(this.hitTest(e.offsetX, e.offsetY));
  }

  private pointerUp(e: PointerEvent): void {
    this.canvas.releasePointerCapture(e.pointerId);
    if (this.panning) {
      this.panning = null;
      return;
    }
    if (this.drawing) {
      this.drawing = false;
      if (this.polygon.length >= 3) {
        this.callbacks.onLasso([...this.polygon]);
      } else {
        this.polygon = [];
      }
      this.render();
    }
  }

  private pointerCancel(): void {
    this.panning = null;
    if (this.drawing) {
      this.drawing = false;
      this.polygon = [];
      this.render();
    }
    this.callbacks.onHover(null);
  }

  private wheel(e: WheelEvent): void {
    e.preventDefault();
    const factor = e.deltaY < 0 ? 1.15 : 1 / 1.15;
    const [dx, dy] = this.toData(e.offsetX, e.offsetY);
    this.transform.scale *= factor;
    const [sx, sy] = this.toScreen(dx, dy);
    this.transform.tx += e.offsetX - sx;
    this.transform.ty += e.offsetY - sy;
    this.render();
  }

  private hitTest(sx: number, sy: number): ProjectionPoint | null {
    let best: ProjectionPoint | null = null;
    let bestDist = 36; // 6px radius
    for (const p of this.points) {
      const [px, py] = this.toScreen(p.x, p.y);
      const d = (px - sx) ** 2 + (py - sy) ** 2;
      if (d < bestDist) {
        bestDist = d;
        best = p;
      }
    }
    return best;
  }
}
