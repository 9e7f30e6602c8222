/** Inspector application wiring.
 *
 * Single source of truth is the server: the UI renders what it fetches,
 * funnels every relabel through the acknowledged flow, and keeps the
 * reproducible view state (projection, color-by, polygon) in the URL
 * fragment.
 */

import { ApiError, Client, type ProjectionPoint } from "./api.js";
import { selectInPolygon, type Vertex } from "./geometry.js";
import { colorForCategory } from "./palette.js";
import { decodeFragment, encodeFragment, type ViewState } from "./state.js";
import { labelHistogram, relabelFlow } from "./flows.js";
import { ScatterView } from "./scatter.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

interface MetricsPanelState {
  label: string;
  reference: string;
  before: string;
  after: string;
  seq: number | null;
}

class App {
  private client = new Client("");
  private state: ViewState;
  private points: ProjectionPoint[] = [];
  private knownIds = new Set<string>();
  private selection: string[] = [];
  private scatter: ScatterView;
  private labels: string[] = [];

  constructor() {
    this.state = decodeFragment(window.location.hash);
    this.scatter = new ScatterView(el<HTMLCanvasElement>("scatter"), {
      onLasso: (polygon) => this.applyLasso(polygon),
      onHover: (p) => this.showHover(p),
    });
  }

  async boot(): Promise<void> {
    const summary = await this.client.summary();
    el("summary").textContent =
      `${summary.n} records, ${summary.dim}-d, ` +
      `${Object.keys(summary.cohorts).length} cohorts`;
    this.labels = Object.keys(summary.label_schema);

    const colorBy = el<HTMLSelectElement>("color-by");
    const options = ["cohort", ...this.labels.map((l) => `label:${l}`)];
    if (summary.has_confidence) options.push("confidence");
    colorBy.innerHTML = options
      .map((o) => `<option value="${o}">${o}</option>`)
      .join("");
    if (options.includes(this.state.colorBy)) colorBy.value = this.state.colorBy;
    colorBy.addEventListener("change", () => {
      this.state.colorBy = colorBy.value;
      this.scatter.setColorBy(colorBy.value);
      this.renderLegend();
      this.pushFragment();
    });

    const labelSel = el<HTMLSelectElement>("relabel-label");
    labelSel.innerHTML = this.labels
      .map((l) => `<option value="${l}">${l}</option>`)
      .join("");
    labelSel.addEventListener("change", () => this.renderValueChoices(summary.label_schema));
    this.renderValueChoices(summary.label_schema);

    const metricLabel = el<HTMLSelectElement>("metric-label");
    const metricRef = el<HTMLSelectElement>("metric-reference");
    for (const sel of [metricLabel, metricRef]) {
      sel.innerHTML = this.labels
        .map((l) => `<option value="${l}">${l}</option>`)
        .join("");
    }
    if (this.labels.length > 1) metricRef.selectedIndex = 1;

    el<HTMLButtonElement>("metric-refresh").addEventListener("click", () =>
      this.refreshMetric(),
    );
    el<HTMLButtonElement>("relabel-apply").addEventListener("click", () =>
      this.confirmRelabel(),
    );
    el<HTMLButtonElement>("clear-selection").addEventListener("click", () => {
      this.setSelection([], []);
    });

    window.addEventListener("hashchange", () => this.restoreFromFragment());

    await this.loadProjection();
    await this.refreshActions();
  }

  private async loadProjection(): Promise<void> {
    const proj = await this.client.projection(this.state.projection);
    this.points = proj.points;
    this.knownIds = new Set(proj.points.map((p) => p.id));
    el("projection-info").textContent =
      proj.final_kl === null
        ? `projection "${proj.name}"`
        : `projection "${proj.name}" (KL ${proj.final_kl.toFixed(3)})`;
    this.scatter.setPoints(proj.points);
    this.scatter.setColorBy(this.state.colorBy);
    this.renderLegend();
    if (this.state.polygon.length >= 3) {
      this.applyLasso(this.state.polygon, false);
    }
  }

  private renderLegend(): void {
    const legend = el("legend");
    const cats = this.scatter.categories();
    legend.innerHTML = cats
      .map(
        (c) =>
          `<span class="chip"><span class="dot" style="background:${colorForCategory(c)}"></span>${c}</span>`,
      )
      .join("");
  }

  private renderValueChoices(schema: Record<string, string[]>): void {
    const label = el<HTMLSelectElement>("relabel-label").value;
    const valueSel = el<HTMLSelectElement>("relabel-value");
    valueSel.innerHTML = (schema[label] ?? [])
      .map((v) => `<option value="${v}">${v}</option>`)
      .join("");
  }

  private applyLasso(polygon: Vertex[], push = true): void {
    const ids = selectInPolygon(this.points, { vertices: polygon, closed: true });
    this.setSelection(ids, polygon, push);
  }

  private setSelection(ids: string[], polygon: Vertex[], push = true): void {
    this.selection = ids.filter((id) => this.knownIds.has(id));
    this.state.polygon = polygon;
    this.scatter.setSelection(this.selection);
    this.scatter.setPolygon(polygon);
    el("selection-count").textContent = `${this.selection.length} selected`;
    this.renderSelectionHistogram();
    if (push) this.pushFragment();
  }

  private renderSelectionHistogram(): void {
    const label = el<HTMLSelectElement>("relabel-label").value;
    const hist = labelHistogram(this.points, new Set(this.selection), label);
    el("selection-histogram").innerHTML = [...hist.entries()]
      .sort((a, b) => b[1] - a[1])
      .map(([v, n]) => `<li>${v}: ${n}</li>`)
      .join("");
  }

  private showHover(p: ProjectionPoint | null): void {
    const box = el("hover");
    if (!p) {
      box.textContent = "";
      return;
    }
    const labels = Object.entries(p.labels)
      .map(([k, v]) => `${k}=${v}`)
      .join(" ");
    const conf = p.confidence === null ? "" : ` conf=${p.confidence.toFixed(3)}`;
    box.textContent = `${p.id} [${p.cohort}] ${labels}${conf}`;
  }

  private async confirmRelabel(): Promise<void> {
    const label = el<HTMLSelectElement>("relabel-label").value;
    const value = el<HTMLSelectElement>("relabel-value").value;
    const author = el<HTMLInputElement>("relabel-author").value || "inspector";
    const note = el<HTMLInputElement>("relabel-note").value || null;
    const status = el("relabel-status");
    if (this.selection.length === 0) {
      status.textContent = "selection is empty";
      return;
    }
    const hist = labelHistogram(this.points, new Set(this.selection), label);
    const histText = [...hist.entries()].map(([v, n]) => `${v}: ${n}`).join(", ");
    const ok = window.confirm(
      `Set ${label}=${value} on ${this.selection.length} records?\n` +
        `Current values: ${histText}`,
    );
    if (!ok) return;
    status.textContent = "waiting for server...";
    try {
      const metrics = this.metricsConfig();
      const outcome = await relabelFlow(
        this.client,
        { ids: this.selection, labelName: label, value, author, note },
        metrics,
      );
      status.textContent = `action #${outcome.ack.seq} acknowledged`;
      this.renderMetricPanel({
        label: metrics.label,
        reference: metrics.reference,
        before: formatReport(outcome.before.accuracy),
        after: formatReport(outcome.after.accuracy),
        seq: outcome.after.seq,
      });
      await this.loadProjection();
      await this.refreshActions();
    } catch (err) {
      if (err instanceof ApiError) {
        status.textContent =
          err.offendingIds.length > 0
            ? `${err.detail} (offending: ${err.offendingIds.slice(0, 5).join(", ")})`
            : err.detail;
      } else {
        status.textContent = String(err);
      }
    }
  }

  private metricsConfig() {
    return {
      label: el<HTMLSelectElement>("metric-label").value,
      reference: el<HTMLSelectElement>("metric-reference").value,
      b: 1000,
      seed: 0,
    };
  }

  private async refreshMetric(): Promise<void> {
    const cfg = this.metricsConfig();
    try {
      const resp = await this.client.accuracy(cfg.label, cfg.reference, cfg.b, cfg.seed);
      this.renderMetricPanel({
        label: cfg.label,
        reference: cfg.reference,
        before: "",
        after: formatReport(resp.accuracy),
        seq: resp.seq,
      });
    } catch (err) {
      el("metric-value").textContent = err instanceof ApiError ? err.detail : String(err);
    }
  }

  private renderMetricPanel(panel: MetricsPanelState): void {
    el("metric-value").innerHTML =
      (panel.before ? `<div>before: ${panel.before}</div>` : "") +
      `<div>${panel.before ? "after: " : ""}${panel.after}</div>` +
      `<div class="muted">at action seq ${panel.seq}</div>`;
  }

  private async refreshActions(): Promise<void> {
    const log = await this.client.actions();
    el("actions").innerHTML = log.actions
      .slice()
      .reverse()
      .map(
        (a) =>
          `<li>#${a.seq} ${a.label_name}=${a.value} on ${a.ids.length} ids ` +
          `by ${a.author}${a.note ? ` (${a.note})` : ""}</li>`,
      )
      .join("");
  }

  private pushFragment(): void {
    const fragment = encodeFragment(this.state);
    if (window.location.hash.slice(1) !== fragment) {
      window.history.replaceState(null, "", `#${fragment}`);
    }
  }

  private restoreFromFragment(): void {
    this.state = decodeFragment(window.location.hash);
    el<HTMLSelectElement>("color-by").value = this.state.colorBy;
    this.scatter.setColorBy(this.state.colorBy);
    if (this.state.polygon.length >= 3) {
      this.applyLasso(this.state.polygon, false);
    } else {
      this.setSelection([], [], false);
    }
  }
}

function formatReport(rep: { point: number; ci: [number, number] }): string {
  return `${rep.point.toFixed(4)} [${rep.ci[0].toFixed(4)}, ${rep.ci[1].toFixed(4)}]`;
}

new App().boot().catch((err) => {
  document.body.insertAdjacentHTML(
    "afterbegin",
    `<div class="boot-error">failed to load: ${String(err)}</div>`,
  );
});
