// Visitor experience: panorama navigation, marker interaction, content
// popups, interaction reporting. One modal at a time; every gesture maps to
// exactly one reported event.

import { GatewayClient } from "./api.js";
import { CameraController } from "./camera.js";
import { EventQueue } from "./events.js";
import { MarkerLayer } from "./markers.js";
import { buildPopup } from "./popups.js";
import { createRenderer, type PanoramaRenderer } from "./renderer.js";
import {
  pickLocalized,
  type BundleAsset,
  type BundleEnvironment,
  type DisplayDirective,
  type TourBundle,
} from "./types.js";

export interface ViewerOptions {
  languages?: string[];
  width?: number;
  height?: number;
  makeRenderer?: (width: number, height: number) => PanoramaRenderer;
  flushMs?: number;
  now?: () => number;
}

interface OpenView {
  directive: DisplayDirective;
  startedAt: number;
}

export class VisitorApp {
  readonly root: HTMLElement;
  readonly client: GatewayClient;
  readonly tourId: string;
  private readonly opts: ViewerOptions;
  private bundle: TourBundle | null = null;
  private events: EventQueue | null = null;
  private renderer: PanoramaRenderer | null = null;
  private camera: CameraController | null = null;
  private markerLayer: MarkerLayer | null = null;
  private popupHost: HTMLElement | null = null;
  private currentEnv: BundleEnvironment | null = null;
  private openView: OpenView | null = null;
  private languages: string[];

  constructor(root: HTMLElement, client: GatewayClient, tourId: string, opts: ViewerOptions = {}) {
    this.root = root;
    this.client = client;
    this.tourId = tourId;
    this.opts = opts;
    this.languages = opts.languages ?? [...navigator.languages ?? []];
  }

  get session(): EventQueue | null {
    return this.events;
  }

  async start(): Promise<void> {
    this.root.textContent = "";
    let bundle: TourBundle;
    let sessionId: string;
    try {
      const result = await this.client.getBundle(this.tourId, this.languages);
      bundle = result.bundle;
      sessionId = result.sessionId;
    } catch (err) {
      this.showError(err);
      return;
    }
    this.bundle = bundle;
    this.events = new EventQueue(
      sessionId,
      (events) => this.client.postEvents(events).then(() => undefined),
      { flushMs: this.opts.flushMs ?? 3000 },
    );

    const width = this.opts.width ?? this.root.clientWidth ?? 960;
    const height = this.opts.height ?? this.root.clientHeight ?? 540;
    const make = this.opts.makeRenderer ?? createRenderer;
    this.renderer = make(width || 960, height || 540);

    const stage = document.createElement("div");
    stage.className = "stage";
    stage.append(this.renderer.element);

    const overlay = document.createElement("div");
    overlay.className = "marker-overlay";
    stage.append(overlay);

    this.popupHost = document.createElement("div");
    this.popupHost.className = "popup-host";
    stage.append(this.popupHost);

    const banner = document.createElement("h1");
    banner.className = "tour-title";
    banner.textContent = pickLocalized(bundle.title, this.languages, bundle.default_language);
    this.root.append(banner, stage);

    this.camera = new CameraController({ yaw: 0, pitch: 0 });
    this.markerLayer = new MarkerLayer(
      overlay,
      {
        onActivate: (asset) => this.activateMarker(asset),
        onHover: (asset) => this.events?.emit("hover_asset", {
          env_id: this.currentEnv?.env_id,
          asset_id: asset.asset_id,
        }),
        onNavigate: (target) => this.navigate(target),
      },
      this.languages,
      bundle.default_language,
    );

    this.camera.onChange((cam) => {
      this.renderer?.setCamera(cam);
      if (this.currentEnv && this.renderer) {
        this.markerLayer?.update(cam, this.renderer.viewport());
      }
    });
    this.wirePointer(stage);

    const entry = bundle.environments.find((e) => e.env_id === bundle.entry_env_id)
      ?? bundle.environments[0];
    if (!entry) {
      this.showError(new Error("bundle has no environments"));
      return;
    }
    await this.enterEnvironment(entry, "enter_environment");
  }

  /** The environment switch itself; kind picks the reported event. */
  private async enterEnvironment(
    env: BundleEnvironment,
    kind: "enter_environment" | "navigate",
  ): Promise<void> {
    this.closePopup();
    this.currentEnv = env;
    this.events?.emit(kind, { env_id: env.env_id });
    this.camera?.jumpTo(env.initial_view);
    if (this.renderer) {
      await this.renderer.setPanorama(
        this.client.mediaUrl(env.panorama.locator),
        env.panorama.width,
        env.panorama.height,
      ).catch(() => this.showError(new Error("panorama failed to load")));
      this.markerLayer?.setScene(env.assets, env.nav_links);
      this.markerLayer?.update(this.camera!.direction, this.renderer.viewport());
      this.renderer.setCamera(this.camera!.direction);
    }
  }

  private navigate(target: string): void {
    const env = this.bundle?.environments.find((e) => e.env_id === target);
    if (env) void this.enterEnvironment(env, "navigate");
  }

  /** First-rank directive wins; activation and view start report together. */
  activateMarker(asset: BundleAsset): void {
    const directive = asset.directives[0];
    if (!directive || !this.popupHost) return;
    this.closePopup();

    this.events?.emit("activate_asset", {
      env_id: this.currentEnv?.env_id,
      asset_id: asset.asset_id,
      content_id: directive.content_id,
    });
    this.events?.emit("content_view_start", {
      env_id: this.currentEnv?.env_id,
      asset_id: asset.asset_id,
      content_id: directive.content_id,
    });
    this.openView = {
      directive,
      startedAt: (this.opts.now ?? Date.now)(),
    };

    const popup = buildPopup(directive, {
      mediaUrl: (locator) => this.client.mediaUrl(locator),
      fetchText: (locator) => this.client.fetchText(locator),
      onClose: () => this.closePopup(),
    });
    this.popupHost.append(popup.element);
  }

  /** Closing reports content_view_end; at most one modal is ever open. */
  closePopup(): void {
    if (this.popupHost) this.popupHost.textContent = "";
    if (!this.openView) return;
    const view = this.openView;
    this.openView = null;
    this.events?.emit("content_view_end", {
      env_id: this.currentEnv?.env_id,
      asset_id: view.directive.asset_id,
      content_id: view.directive.content_id,
    });
  }

  private wirePointer(stage: HTMLElement): void {
    stage.addEventListener("pointerdown", (ev) => {
      if ((ev.target as HTMLElement).closest(".marker, .nav-hotspot, .popup")) return;
      this.camera?.pointerDown(ev.clientX, ev.clientY);
    });
    stage.addEventListener("pointermove", (ev) => {
      if (this.renderer) {
        this.camera?.pointerMove(ev.clientX, ev.clientY, this.renderer.viewport());
      }
    });
    stage.addEventListener("pointerup", () => this.camera?.pointerUp());
    stage.addEventListener("pointerleave", () => this.camera?.pointerUp());
  }

  private showError(err: unknown): void {
    const panel = document.createElement("div");
    panel.className = "error-panel";
    panel.textContent = err instanceof Error ? err.message : String(err);
    this.root.append(panel);
  }

  stop(): void {
    this.events?.stop();
    void this.events?.flush();
  }
}
