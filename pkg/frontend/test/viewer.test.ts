// @vitest-environment happy-dom
import { beforeEach, describe, expect, it, vi } from "vitest";

import { GatewayClient } from "../src/api.js";
import { AdminConsole } from "../src/admin.js";
import { HOVER_DEBOUNCE_MS } from "../src/markers.js";
import { ImagePanorama } from "../src/renderer.js";
import { VisitorApp } from "../src/viewer.js";
import type { TourBundle } from "../src/types.js";

import { FakeGateway } from "./fakegateway.js";
import { COSTUME_TEXT, FIXTURE_BUNDLE, FIXTURE_KINDS, TEXT_HASH } from "./fixture.js";

function makeApp(gateway: FakeGateway): { app: VisitorApp; root: HTMLElement } {
  const root = document.createElement("div");
  document.body.append(root);
  const client = new GatewayClient("http://gateway.test", null, gateway.fetch);
  const app = new VisitorApp(root, client, FIXTURE_BUNDLE.tour_id, {
    languages: ["pt"],
    width: 960,
    height: 540,
    makeRenderer: (w, h) => new ImagePanorama(w, h),
    flushMs: 0,
  });
  return { app, root };
}

function marker(root: HTMLElement, assetId: string): HTMLButtonElement {
  const el = root.querySelector(`[data-asset-id="${assetId}"]`);
  expect(el, `marker ${assetId}`).not.toBeNull();
  return el as HTMLButtonElement;
}

describe("VisitorApp", () => {
  let gateway: FakeGateway;

  beforeEach(() => {
    document.body.innerHTML = "";
    gateway = new FakeGateway(FIXTURE_BUNDLE, FIXTURE_KINDS);
    gateway.texts[TEXT_HASH] = COSTUME_TEXT;
  });

  it("renders the entry room with its two markers", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();
    expect(root.querySelector(".tour-title")?.textContent).toBe("Terra de Miranda");
    expect(root.querySelectorAll(".marker")).toHaveLength(2);
    expect(root.querySelectorAll(".nav-hotspot")).toHaveLength(1);
    // session comes from the bundle response header
    expect(app.session?.sessionId).toBe("fake-session-1");
    // entering the tour reports exactly one event so far
    expect(app.session?.pending).toBe(1);
  });

  it("renders no markers for an environment without bound assets", async () => {
    const empty: TourBundle = {
      ...FIXTURE_BUNDLE,
      entry_env_id: "entrance-hall",
      environments: FIXTURE_BUNDLE.environments.map((e) => ({
        ...e,
        is_entry: e.env_id === "entrance-hall",
      })),
    };
    const emptyGateway = new FakeGateway(empty, FIXTURE_KINDS);
    const { app, root } = makeApp(emptyGateway);
    await app.start();
    expect(root.querySelectorAll(".marker")).toHaveLength(0);
    expect(root.querySelector(".pano-fallback")).not.toBeNull();
  });

  it("opens the text popup when the mannequin marker is clicked", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    marker(root, "pauliteiro-mannequin").click();
    await vi.waitFor(() => {
      expect(root.querySelector(".popup-text")?.textContent).toBe(COSTUME_TEXT);
    });
    expect(root.querySelector(".popup-popup_text")).not.toBeNull();
    expect(root.querySelector("h2")?.textContent).toBe("O traje do Pauliteiro");

    await app.session!.flush();
    const kinds = gateway.events.map((e) => e.kind);
    expect(kinds).toEqual([
      "enter_environment",
      "activate_asset",
      "content_view_start",
    ]);
  });

  it("plays the embedded video when the panel marker is clicked", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    marker(root, "dance-panel").click();
    const frame = root.querySelector("iframe");
    expect(frame?.src).toBe("https://www.youtube.com/embed/iF6BUQ5sh-k");

    await app.session!.flush();
    const last = gateway.events[gateway.events.length - 1];
    expect(last.kind).toBe("content_view_start");
    expect(last.content_id).toBe("dance-performance-video");
  });

  it("closing a popup reports a view end no earlier than its start", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    marker(root, "pauliteiro-mannequin").click();
    (root.querySelector(".popup-close") as HTMLButtonElement).click();
    expect(root.querySelector(".popup")).toBeNull();

    await app.session!.flush();
    const start = gateway.events.find((e) => e.kind === "content_view_start")!;
    const end = gateway.events.find((e) => e.kind === "content_view_end")!;
    expect(end.timestamp).toBeGreaterThanOrEqual(start.timestamp);
    expect(end.content_id).toBe("pauliteiro-costume-pt");
  });

  it("keeps at most one popup open", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    marker(root, "pauliteiro-mannequin").click();
    marker(root, "dance-panel").click();
    expect(root.querySelectorAll(".popup")).toHaveLength(1);
    expect(root.querySelector("iframe")).not.toBeNull();

    await app.session!.flush();
    // the implicit close of the first view still reported its end
    const kinds = gateway.events.map((e) => e.kind);
    expect(kinds.filter((k) => k === "content_view_end")).toHaveLength(1);
  });

  it("debounces hover for 500 ms and reports it once per mouse-in", async () => {
    vi.useFakeTimers();
    try {
      const { app, root } = makeApp(gateway);
      await app.start();
      const el = marker(root, "pauliteiro-mannequin");

      el.dispatchEvent(new Event("pointerenter"));
      vi.advanceTimersByTime(HOVER_DEBOUNCE_MS - 1);
      expect(countKind(app)).toBe(0);
      vi.advanceTimersByTime(1);
      expect(countKind(app)).toBe(1);

      // sweeping across without lingering reports nothing
      el.dispatchEvent(new Event("pointerleave"));
      el.dispatchEvent(new Event("pointerenter"));
      vi.advanceTimersByTime(100);
      el.dispatchEvent(new Event("pointerleave"));
      vi.advanceTimersByTime(HOVER_DEBOUNCE_MS);
      expect(countKind(app)).toBe(1);

      // a second deliberate hover counts again
      el.dispatchEvent(new Event("pointerenter"));
      vi.advanceTimersByTime(HOVER_DEBOUNCE_MS);
      expect(countKind(app)).toBe(2);
    } finally {
      vi.useRealTimers();
    }

    function countKind(app: VisitorApp): number {
      let n = 0;
      // peek through the queue without flushing
      for (const e of (app.session as unknown as {
        queue: Array<{ event: { kind: string } }>;
      }).queue) {
        if (e.event.kind === "hover_asset") n += 1;
      }
      return n;
    }
  });

  it("navigates between rooms and reports the move", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    (root.querySelector(".nav-hotspot") as HTMLButtonElement).click();
    await vi.waitFor(() => {
      expect(root.querySelectorAll(".marker")).toHaveLength(0);
    });

    await app.session!.flush();
    const kinds = gateway.events.map((e) => e.kind);
    expect(kinds).toEqual(["enter_environment", "navigate"]);
    expect(gateway.events[1].env_id).toBe("entrance-hall");
  });

  it("shows an error panel when the gateway is unreachable", async () => {
    const root = document.createElement("div");
    document.body.append(root);
    const client = new GatewayClient("http://gateway.test", null, async () => {
      throw new Error("connection refused");
    });
    const app = new VisitorApp(root, client, "terra-de-miranda", { flushMs: 0 });
    await app.start();
    expect(root.querySelector(".error-panel")?.textContent).toContain(
      "connection refused",
    );
  });

  it("both interactions land in the stats dashboard within one refresh", async () => {
    const { app, root } = makeApp(gateway);
    await app.start();

    // visit both assets, closing each popup to complete the views
    marker(root, "pauliteiro-mannequin").click();
    (root.querySelector(".popup-close") as HTMLButtonElement).click();
    marker(root, "dance-panel").click();
    (root.querySelector(".popup-close") as HTMLButtonElement).click();
    await app.session!.flush();

    const adminRoot = document.createElement("div");
    document.body.append(adminRoot);
    const adminClient = new GatewayClient("http://gateway.test", gateway.token, gateway.fetch);
    const console_ = new AdminConsole(adminRoot, adminClient, FIXTURE_BUNDLE.tour_id, {
      makeRenderer: (w, h) => new ImagePanorama(w, h),
    });
    await console_.start(); // the initial load is the one refresh

    const keys = [...adminRoot.querySelectorAll(".stats-table tbody tr")].map(
      (tr) => (tr as HTMLTableRowElement).dataset.groupKey,
    );
    expect(keys).toContain("text");
    expect(keys).toContain("video");
    const textRow = adminRoot.querySelector('tr[data-group-key="text"]')!;
    const cells = [...textRow.querySelectorAll("td")].map((td) => td.textContent);
    expect(cells[1]).toBe("1"); // activations
    expect(cells[2]).toBe("1"); // complete views
  });
});
