// Entry point. The gateway serves this app at /ui; the hash picks the role:
// plain URLs get the visitor viewer, #/admin the curator console (token
// prompt included). ?tour=<id> overrides the tour, else the first listed.

import { AdminConsole } from "./admin.js";
import { GatewayClient } from "./api.js";
import { VisitorApp } from "./viewer.js";

async function pickTour(client: GatewayClient, requested: string | null): Promise<string> {
  if (requested) return requested;
  const tours = await client.listTours();
  if (tours.length === 0) throw new Error("the gateway serves no tours");
  return tours[0];
}

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) return;
  const params = new URLSearchParams(window.location.search);
  const baseUrl = params.get("gateway") ?? window.location.origin;
  const requested = params.get("tour");

  if (window.location.hash.startsWith("#/admin")) {
    const token = window.sessionStorage.getItem("mirandum_token")
      ?? window.prompt("Manager token:");
    if (!token) return;
    window.sessionStorage.setItem("mirandum_token", token);
    const client = new GatewayClient(baseUrl, token);
    const tourId = await pickTour(client, requested);
    await new AdminConsole(root, client, tourId).start();
    return;
  }

  const client = new GatewayClient(baseUrl);
  const tourId = await pickTour(client, requested);
  const app = new VisitorApp(root, client, tourId);
  window.addEventListener("beforeunload", () => app.stop());
  await app.start();
}

void boot().catch((err) => {
  const root = document.getElementById("app");
  if (root) {
    const panel = document.createElement("div");
    panel.className = "error-panel";
    panel.textContent = err instanceof Error ? err.message : String(err);
    root.append(panel);
  }
});
