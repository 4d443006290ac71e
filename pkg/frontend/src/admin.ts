// Curator console: token-gated manifest overview, click-to-place asset
// authoring on the panorama, and a statistics dashboard fed by /stats.
// Server-side rejections surface as banners (401) or field-level lists
// (validation reports); a 409 on delete names the assets still bound.

import { GatewayClient, GatewayError } from "./api.js";
import { CameraController } from "./camera.js";
import { screenToDirection, wrapYaw, type Viewport } from "./projection.js";
import { createRenderer, type PanoramaRenderer } from "./renderer.js";
import type { StatsReport, StatsRow, TourBundle } from "./types.js";

export interface AdminOptions {
  width?: number;
  height?: number;
  makeRenderer?: (width: number, height: number) => PanoramaRenderer;
}

const STATS_GROUPS = ["content_kind", "asset", "content", "environment"];

export class AdminConsole {
  readonly root: HTMLElement;
  readonly client: GatewayClient;
  readonly tourId: string;
  private readonly opts: AdminOptions;
  private renderer: PanoramaRenderer | null = null;
  private camera: CameraController | null = null;
  private bundle: TourBundle | null = null;
  private revision: number | null = null;
  private banner: HTMLElement;
  private placeForm: HTMLFormElement;
  private statsHost: HTMLElement;
  private validationHost: HTMLElement;

  constructor(root: HTMLElement, client: GatewayClient, tourId: string, opts: AdminOptions = {}) {
    this.root = root;
    this.client = client;
    this.tourId = tourId;
    this.opts = opts;
    this.banner = document.createElement("div");
    this.banner.className = "admin-banner";
    this.placeForm = document.createElement("form");
    this.statsHost = document.createElement("section");
    this.statsHost.className = "stats-host";
    this.validationHost = document.createElement("section");
    this.validationHost.className = "validation-host";
  }

  async start(): Promise<void> {
    this.root.textContent = "";
    this.root.append(this.banner);

    let manifest: Record<string, unknown>;
    try {
      const tour = await this.client.getTour(this.tourId);
      manifest = tour.manifest;
      this.revision = (manifest["revision"] as number) ?? null;
      this.renderValidation(tour.validation.errors, tour.validation.warnings);
    } catch (err) {
      this.showError(err);
      return;
    }

    const { bundle } = await this.client.getBundle(this.tourId);
    this.bundle = bundle;

    const stage = document.createElement("div");
    stage.className = "stage admin-stage";
    const width = this.opts.width ?? 960;
    const height = this.opts.height ?? 540;
    const make = this.opts.makeRenderer ?? createRenderer;
    this.renderer = make(width, height);
    stage.append(this.renderer.element);
    this.camera = new CameraController(
      bundle.environments[0]?.initial_view ?? { yaw: 0, pitch: 0 },
    );
    this.camera.onChange((cam) => this.renderer?.setCamera(cam));

    const entry = bundle.environments.find((e) => e.env_id === bundle.entry_env_id);
    if (entry && this.renderer) {
      await this.renderer.setPanorama(
        this.client.mediaUrl(entry.panorama.locator),
        entry.panorama.width,
        entry.panorama.height,
      ).catch(() => undefined);
    }

    // click-to-place: a click on the panorama fills the anchor fields with
    // the direction under the pointer
    stage.addEventListener("click", (ev) => {
      if (!this.renderer || !this.camera) return;
      const rect = (this.renderer.element as HTMLElement).getBoundingClientRect?.();
      const x = ev.clientX - (rect?.left ?? 0);
      const y = ev.clientY - (rect?.top ?? 0);
      this.fillAnchor(x, y, this.renderer.viewport());
    });

    this.buildPlacementForm(entry?.env_id ?? bundle.environments[0]?.env_id ?? "");
    this.root.append(stage, this.placeForm, this.statsHost, this.validationHost);
    await this.refreshStats("content_kind");
  }

  /** Inverse-project a stage click into anchor yaw/pitch form values. */
  fillAnchor(x: number, y: number, vp: Viewport): void {
    if (!this.camera) return;
    const dir = screenToDirection(x, y, this.camera.direction, vp);
    (this.placeForm.elements.namedItem("yaw") as HTMLInputElement).value =
      wrapYaw(dir.yaw).toFixed(2);
    (this.placeForm.elements.namedItem("pitch") as HTMLInputElement).value =
      dir.pitch.toFixed(2);
  }

  private buildPlacementForm(envId: string): void {
    this.placeForm.className = "place-form";
    this.placeForm.innerHTML = `
      <h2>Place asset</h2>
      <label>Asset id <input name="asset_id" required></label>
      <label>Environment <input name="environment_id" value="${envId}"></label>
      <label>Yaw <input name="yaw" type="number" step="0.01" required></label>
      <label>Pitch <input name="pitch" type="number" step="0.01" required></label>
      <label>Label (pt) <input name="label_pt"></label>
      <label>Style <select name="marker_style">
        <option>dot</option><option>label</option><option>ring</option>
      </select></label>
      <button type="submit">Save asset</button>
    `;
    this.placeForm.addEventListener("submit", (ev) => {
      ev.preventDefault();
      void this.submitAsset();
    });
  }

  async submitAsset(): Promise<void> {
    const field = (name: string) =>
      (this.placeForm.elements.namedItem(name) as HTMLInputElement | HTMLSelectElement).value;
    const label: Record<string, string> = {};
    if (field("label_pt")) label["pt"] = field("label_pt");
    const edit = {
      op: "upsert_asset",
      asset: {
        asset_id: field("asset_id"),
        environment_id: field("environment_id"),
        anchor: { yaw: Number(field("yaw")), pitch: Number(field("pitch")) },
        marker_style: field("marker_style"),
        label,
        bindings: this.existingBindings(field("asset_id")),
      },
    };
    try {
      const result = await this.client.postEdit(
        this.tourId, edit, this.revision ?? undefined);
      this.revision = result.revision;
      this.showNotice(`saved ${field("asset_id")} (revision ${result.revision})`);
    } catch (err) {
      this.showError(err);
    }
  }

  /** Re-upserting an existing asset must not silently drop its bindings. */
  private existingBindings(assetId: string): Array<Record<string, unknown>> {
    for (const env of this.bundle?.environments ?? []) {
      for (const asset of env.assets) {
        if (asset.asset_id === assetId) {
          // directives arrive rank-ordered; bindings are priority-by-position
          return asset.directives.map((d) => ({
            content_id: d.content_id,
            presentation: d.presentation,
          }));
        }
      }
    }
    return [];
  }

  async removeContent(contentId: string): Promise<void> {
    try {
      const result = await this.client.postEdit(
        this.tourId,
        { op: "remove", target: "content", id: contentId },
        this.revision ?? undefined,
      );
      this.revision = result.revision;
      this.showNotice(`removed ${contentId}`);
    } catch (err) {
      this.showError(err);
    }
  }

  async refreshStats(group: string): Promise<void> {
    let report: StatsReport;
    try {
      report = await this.client.getStats({
        group,
        from: 0,
        to: Date.now() + 60_000,
      });
    } catch (err) {
      this.showError(err);
      return;
    }
    this.statsHost.textContent = "";

    const picker = document.createElement("select");
    picker.className = "stats-group";
    for (const g of STATS_GROUPS) {
      const opt = document.createElement("option");
      opt.value = g;
      opt.textContent = g;
      opt.selected = g === group;
      picker.append(opt);
    }
    picker.addEventListener("change", () => void this.refreshStats(picker.value));

    this.statsHost.append(picker, statsTable(report), statsBarChart(report.rows));
  }

  private renderValidation(
    errors: Array<{ code: string; path: string; message: string }>,
    warnings: Array<{ code: string; path: string; message: string }>,
  ): void {
    this.validationHost.textContent = "";
    const list = document.createElement("ul");
    list.className = "validation-list";
    for (const entry of errors) {
      const li = document.createElement("li");
      li.className = "validation-error";
      li.textContent = `${entry.code} at ${entry.path}: ${entry.message}`;
      list.append(li);
    }
    for (const entry of warnings) {
      const li = document.createElement("li");
      li.className = "validation-warning";
      li.textContent = `${entry.code} at ${entry.path}: ${entry.message}`;
      list.append(li);
    }
    if (list.childElementCount > 0) this.validationHost.append(list);
  }

  private showNotice(text: string): void {
    this.banner.className = "admin-banner notice";
    this.banner.textContent = text;
  }

  showError(err: unknown): void {
    this.banner.className = "admin-banner error";
    if (err instanceof GatewayError) {
      let text = `${err.code}: ${err.message}`;
      const bound = err.details["asset_ids"];
      if (Array.isArray(bound) && bound.length > 0) {
        text += ` (bound by: ${bound.join(", ")})`;
      }
      this.banner.textContent = text;
      if (err.report) this.renderValidation(err.report.errors, err.report.warnings);
      return;
    }
    this.banner.textContent = err instanceof Error ? err.message : String(err);
  }
}

export function statsTable(report: StatsReport): HTMLTableElement {
  const table = document.createElement("table");
  table.className = "stats-table";
  const thead = document.createElement("thead");
  const head = document.createElement("tr");
  for (const col of [
    report.grouping.replace(/^by_/, ""),
    "activations",
    "complete views",
    "incomplete",
    "sessions",
    "mean dwell (ms)",
  ]) {
    const th = document.createElement("th");
    th.textContent = col;
    head.append(th);
  }
  thead.append(head);
  const tbody = document.createElement("tbody");
  for (const row of report.rows) {
    const tr = document.createElement("tr");
    tr.dataset.groupKey = row.group_key;
    const cells = [
      row.group_key,
      String(row.activations),
      String(row.complete_views),
      String(row.incomplete_views),
      String(row.unique_sessions),
      row.mean_dwell_ms === null ? "-" : row.mean_dwell_ms.toFixed(0),
    ];
    for (const text of cells) {
      const td = document.createElement("td");
      td.textContent = text;
      tr.append(td);
    }
    tbody.append(tr);
  }
  table.append(thead, tbody);
  return table;
}

/** Horizontal bars of complete views per group, as a dependency-free SVG. */
export function statsBarChart(rows: StatsRow[]): SVGSVGElement {
  const ns = "http://www.w3.org/2000/svg";
  const barH = 22;
  const gap = 6;
  const labelW = 160;
  const chartW = 420;
  const svg = document.createElementNS(ns, "svg");
  svg.setAttribute("class", "stats-chart");
  svg.setAttribute("width", String(labelW + chartW + 60));
  svg.setAttribute("height", String(Math.max(1, rows.length) * (barH + gap) + gap));
  const max = Math.max(1, ...rows.map((r) => r.complete_views));
  rows.forEach((row, i) => {
    const y = gap + i * (barH + gap);
    const label = document.createElementNS(ns, "text");
    label.setAttribute("x", String(labelW - 8));
    label.setAttribute("y", String(y + barH * 0.7));
    label.setAttribute("text-anchor", "end");
    label.textContent = row.group_key || "(none)";
    const bar = document.createElementNS(ns, "rect");
    bar.setAttribute("x", String(labelW));
    bar.setAttribute("y", String(y));
    bar.setAttribute("height", String(barH));
    bar.setAttribute("width", String((row.complete_views / max) * chartW));
    bar.setAttribute("class", "stats-bar");
    const value = document.createElementNS(ns, "text");
    value.setAttribute("x", String(labelW + (row.complete_views / max) * chartW + 6));
    value.setAttribute("y", String(y + barH * 0.7));
    value.textContent = String(row.complete_views);
    svg.append(label, bar, value);
  });
  return svg;
}
