// Positions asset markers and navigation hotspots over the panorama as DOM
// buttons, reprojected on every camera change. Hover events debounce for
// 500 ms so a pointer sweeping across a marker does not count as interest.

import {
  projectToScreen,
  withinViewport,
  type Viewport,
} from "./projection.js";
import { pickLocalized, type BundleAsset, type Direction, type NavLink } from "./types.js";

export const HOVER_DEBOUNCE_MS = 500;

export interface MarkerCallbacks {
  onActivate: (asset: BundleAsset) => void;
  onHover: (asset: BundleAsset) => void;
  onNavigate: (target: string) => void;
}

export class MarkerLayer {
  private readonly host: HTMLElement;
  private readonly callbacks: MarkerCallbacks;
  private readonly languages: string[];
  private readonly fallbackLang: string;
  private markers = new Map<string, HTMLButtonElement>();
  private navs: Array<{ link: NavLink; element: HTMLButtonElement }> = [];
  private assets: BundleAsset[] = [];
  private hoverTimers = new Map<string, ReturnType<typeof setTimeout>>();
  private hovered = new Set<string>(); // already reported this mouse-in

  constructor(
    host: HTMLElement,
    callbacks: MarkerCallbacks,
    languages: string[],
    fallbackLang: string,
  ) {
    this.host = host;
    this.callbacks = callbacks;
    this.languages = languages;
    this.fallbackLang = fallbackLang;
  }

  setScene(assets: BundleAsset[], navLinks: NavLink[]): void {
    for (const el of this.markers.values()) el.remove();
    for (const nav of this.navs) nav.element.remove();
    for (const timer of this.hoverTimers.values()) clearTimeout(timer);
    this.markers.clear();
    this.navs = [];
    this.hoverTimers.clear();
    this.hovered.clear();
    this.assets = assets;

    for (const asset of assets) {
      const el = document.createElement("button");
      el.className = `marker marker-${asset.marker_style}`;
      el.dataset.assetId = asset.asset_id;
      el.title = pickLocalized(asset.label, this.languages, this.fallbackLang);
      if (asset.marker_style === "label") el.textContent = el.title;
      el.addEventListener("click", () => this.callbacks.onActivate(asset));
      el.addEventListener("pointerenter", () => this.hoverStart(asset));
      el.addEventListener("pointerleave", () => this.hoverEnd(asset));
      this.host.append(el);
      this.markers.set(asset.asset_id, el);
    }
    for (const link of navLinks) {
      const el = document.createElement("button");
      el.className = "nav-hotspot";
      el.dataset.target = link.target;
      el.textContent = "➤";
      el.addEventListener("click", () => this.callbacks.onNavigate(link.target));
      this.host.append(el);
      this.navs.push({ link, element: el });
    }
  }

  /** Reproject every marker for the camera; hide what falls off screen. */
  update(camera: Direction, vp: Viewport): void {
    for (const asset of this.assets) {
      const el = this.markers.get(asset.asset_id);
      if (!el) continue;
      place(el, projectToScreen(asset.anchor, camera, vp), vp);
    }
    for (const { link, element } of this.navs) {
      place(element, projectToScreen(link.direction, camera, vp), vp);
    }
  }

  private hoverStart(asset: BundleAsset): void {
    if (this.hovered.has(asset.asset_id)) return;
    const timer = setTimeout(() => {
      this.hovered.add(asset.asset_id);
      this.hoverTimers.delete(asset.asset_id);
      this.callbacks.onHover(asset);
    }, HOVER_DEBOUNCE_MS);
    this.hoverTimers.set(asset.asset_id, timer);
  }

  private hoverEnd(asset: BundleAsset): void {
    const timer = this.hoverTimers.get(asset.asset_id);
    if (timer !== undefined) clearTimeout(timer);
    this.hoverTimers.delete(asset.asset_id);
    this.hovered.delete(asset.asset_id);
  }
}

function place(
  el: HTMLElement,
  point: { x: number; y: number; visible: boolean },
  vp: Viewport,
): void {
  if (!withinViewport(point, vp, 40)) {
    el.style.display = "none";
    return;
  }
  el.style.display = "";
  el.style.left = `${point.x.toFixed(1)}px`;
  el.style.top = `${point.y.toFixed(1)}px`;
}
