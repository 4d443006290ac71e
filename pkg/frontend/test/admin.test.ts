// @vitest-environment happy-dom
import { beforeEach, describe, expect, it } from "vitest";

import { AdminConsole, statsBarChart } from "../src/admin.js";
import { GatewayClient } from "../src/api.js";
import {
  angularDistanceDeg,
  projectToScreen,
  type Viewport,
} from "../src/projection.js";
import { ImagePanorama } from "../src/renderer.js";

import { FakeGateway } from "./fakegateway.js";
import { FIXTURE_BUNDLE, FIXTURE_KINDS } from "./fixture.js";

const VP: Viewport = { width: 960, height: 540, vfovDeg: 75 };

async function makeConsole(
  gateway: FakeGateway,
  token = gateway.token,
): Promise<{ console_: AdminConsole; root: HTMLElement }> {
  const root = document.createElement("div");
  document.body.append(root);
  const client = new GatewayClient("http://gateway.test", token, gateway.fetch);
  const console_ = new AdminConsole(root, client, FIXTURE_BUNDLE.tour_id, {
    width: VP.width,
    height: VP.height,
    makeRenderer: (w, h) => new ImagePanorama(w, h),
  });
  await console_.start();
  return { console_, root };
}

describe("AdminConsole", () => {
  let gateway: FakeGateway;

  beforeEach(() => {
    document.body.innerHTML = "";
    gateway = new FakeGateway(FIXTURE_BUNDLE, FIXTURE_KINDS);
  });

  it("shows an unauthorized banner for a bad token", async () => {
    const { root } = await makeConsole(gateway, "wrong-token");
    expect(root.querySelector(".admin-banner")?.textContent).toContain("UNAUTHORIZED");
  });

  it("click-to-place recovers the camera direction at screen center", async () => {
    const { console_ } = await makeConsole(gateway);
    // the exhibit room camera starts at (310, -5); aim it at (10, 0)
    // through the public placement entry point
    (console_ as unknown as { camera: { jumpTo(d: object): void } }).camera
      .jumpTo({ yaw: 10, pitch: 0 });
    console_.fillAnchor(VP.width / 2, VP.height / 2, VP);

    const form = document.querySelector(".place-form")!;
    const yaw = Number((form.querySelector('[name="yaw"]') as HTMLInputElement).value);
    const pitch = Number((form.querySelector('[name="pitch"]') as HTMLInputElement).value);
    expect(angularDistanceDeg({ yaw, pitch }, { yaw: 10, pitch: 0 })).toBeLessThan(0.5);
  });

  it("placed markers render back within half a degree and one pixel", async () => {
    const { console_ } = await makeConsole(gateway);
    const camera = { yaw: 123.4, pitch: -12.3 };
    (console_ as unknown as { camera: { jumpTo(d: object): void } }).camera
      .jumpTo(camera);

    // curator clicks a few spots around the viewport...
    const clicks: Array<[number, number]> = [
      [480, 270],
      [120, 80],
      [840, 460],
      [33, 510],
    ];
    const form = document.querySelector(".place-form")!;
    for (const [cx, cy] of clicks) {
      console_.fillAnchor(cx, cy, VP);
      const anchor = {
        yaw: Number((form.querySelector('[name="yaw"]') as HTMLInputElement).value),
        pitch: Number((form.querySelector('[name="pitch"]') as HTMLInputElement).value),
      };
      // ...and the viewer projects the stored anchor back to the screen
      const p = projectToScreen(anchor, camera, VP);
      expect(p.visible).toBe(true);
      expect(Math.hypot(p.x - cx, p.y - cy)).toBeLessThan(1);
      const clicked = { yaw: anchor.yaw, pitch: anchor.pitch };
      expect(angularDistanceDeg(clicked, anchor)).toBeLessThan(0.5);
    }
  });

  it("submitting the form sends an upsert edit and bumps the revision", async () => {
    const { console_, root } = await makeConsole(gateway);
    const form = root.querySelector(".place-form") as HTMLFormElement;
    (form.querySelector('[name="asset_id"]') as HTMLInputElement).value = "new-case";
    (form.querySelector('[name="yaw"]') as HTMLInputElement).value = "120.5";
    (form.querySelector('[name="pitch"]') as HTMLInputElement).value = "-3.25";
    (form.querySelector('[name="label_pt"]') as HTMLInputElement).value = "Vitrine";

    await console_.submitAsset();
    expect(gateway.edits).toHaveLength(1);
    const edit = gateway.edits[0] as {
      op: string;
      asset: { asset_id: string; anchor: { yaw: number; pitch: number } };
    };
    expect(edit.op).toBe("upsert_asset");
    expect(edit.asset.asset_id).toBe("new-case");
    expect(edit.asset.anchor).toEqual({ yaw: 120.5, pitch: -3.25 });
    expect(root.querySelector(".admin-banner")?.textContent).toContain("revision 2");
  });

  it("re-upserting an existing asset preserves its bindings", async () => {
    const { console_, root } = await makeConsole(gateway);
    const form = root.querySelector(".place-form") as HTMLFormElement;
    (form.querySelector('[name="asset_id"]') as HTMLInputElement).value = "dance-panel";
    (form.querySelector('[name="yaw"]') as HTMLInputElement).value = "50";
    (form.querySelector('[name="pitch"]') as HTMLInputElement).value = "5";

    await console_.submitAsset();
    const edit = gateway.edits[0] as { asset: { bindings: unknown[] } };
    expect(edit.asset.bindings).toEqual([
      { content_id: "dance-performance-video", presentation: "popup_video" },
    ]);
  });

  it("surfaces a 409 on bound content with the binding assets named", async () => {
    gateway.boundContent["dance-performance-video"] = ["dance-panel"];
    const { console_, root } = await makeConsole(gateway);

    await console_.removeContent("dance-performance-video");
    const banner = root.querySelector(".admin-banner")!;
    expect(banner.textContent).toContain("STILL_REFERENCED");
    expect(banner.textContent).toContain("dance-panel");
  });

  it("renders field-level validation entries from a rejected edit", async () => {
    gateway.failNextEdit = {
      status: 409,
      code: "INVALID_MANIFEST",
      message: "the edit would leave the tour unservable",
      report: {
        errors: [
          {
            code: "PITCH_RANGE",
            path: "assets[0].anchor.pitch",
            message: "pitch 95.0 outside [-90, +90]",
          },
        ],
        warnings: [],
      },
    };
    const { console_, root } = await makeConsole(gateway);
    const form = root.querySelector(".place-form") as HTMLFormElement;
    (form.querySelector('[name="asset_id"]') as HTMLInputElement).value = "bad";
    (form.querySelector('[name="yaw"]') as HTMLInputElement).value = "0";
    (form.querySelector('[name="pitch"]') as HTMLInputElement).value = "95";

    await console_.submitAsset();
    expect(root.querySelector(".admin-banner")?.textContent).toContain("INVALID_MANIFEST");
    const entry = root.querySelector(".validation-error");
    expect(entry?.textContent).toContain("PITCH_RANGE");
    expect(entry?.textContent).toContain("assets[0].anchor.pitch");
  });

  it("switching the stats grouping refetches the report", async () => {
    gateway.events = [
      {
        event_id: "s-000000",
        session_id: "s",
        timestamp: 1000,
        kind: "activate_asset",
        client: "viewer",
        env_id: "exhibit-room",
        asset_id: "dance-panel",
        content_id: "dance-performance-video",
      },
    ];
    const { console_, root } = await makeConsole(gateway);
    await console_.refreshStats("asset");
    const keys = [...root.querySelectorAll(".stats-table tbody tr")].map(
      (tr) => (tr as HTMLTableRowElement).dataset.groupKey,
    );
    expect(keys).toEqual(["dance-panel"]);
  });
});

describe("statsBarChart", () => {
  it("draws one labelled bar per row, scaled to the maximum", () => {
    const svg = statsBarChart([
      {
        group_key: "text",
        activations: 3,
        complete_views: 4,
        incomplete_views: 0,
        unique_sessions: 2,
        total_dwell_ms: 100,
        mean_dwell_ms: 25,
      },
      {
        group_key: "video",
        activations: 1,
        complete_views: 2,
        incomplete_views: 1,
        unique_sessions: 1,
        total_dwell_ms: 50,
        mean_dwell_ms: 25,
      },
    ]);
    const bars = [...svg.querySelectorAll("rect")];
    expect(bars).toHaveLength(2);
    const widths = bars.map((b) => Number(b.getAttribute("width")));
    expect(widths[0]).toBeGreaterThan(widths[1]);
    expect(widths[1]).toBeCloseTo(widths[0] / 2, 6);
    const labels = [...svg.querySelectorAll("text")].map((t) => t.textContent);
    expect(labels).toContain("text");
    expect(labels).toContain("video");
  });
});
