// Wire types mirroring the gateway's JSON bodies. Field names match the
// server exactly; keep these in sync with the HTTP API, not with any
// internal model.

export interface Direction {
  yaw: number;   // degrees, [0, 360)
  pitch: number; // degrees, [-90, +90]
}

export interface PanoramaInfo {
  locator: string; // URL path servable by the gateway (or absolute URL)
  width: number;
  height: number;
  media_type: string;
}

export interface NavLink {
  direction: Direction;
  target: string;
}

export type LocatorKind = "internal" | "cached" | "embed" | "proxy";

export interface DisplayDirective {
  asset_id: string;
  content_id: string;
  presentation: string;
  payload_locator: string;
  locator_kind: LocatorKind;
  language: string;
  rank: number;
  media_type: string | null;
  title: string;
  credits: string;
  captions: boolean;
}

export interface BundleAsset {
  asset_id: string;
  anchor: Direction;
  marker_style: string;
  label: Record<string, string>;
  directives: DisplayDirective[];
}

export interface BundleEnvironment {
  env_id: string;
  name: Record<string, string>;
  panorama: PanoramaInfo;
  initial_view: Direction;
  nav_links: NavLink[];
  is_entry: boolean;
  assets: BundleAsset[];
}

export interface TourBundle {
  bundle_version: number;
  tour_id: string;
  title: Record<string, string>;
  default_language: string;
  entry_env_id: string;
  environments: BundleEnvironment[];
}

export type EventKind =
  | "enter_environment"
  | "hover_asset"
  | "activate_asset"
  | "content_view_start"
  | "content_view_end"
  | "navigate";

export interface InteractionEvent {
  event_id: string;
  session_id: string;
  timestamp: number; // UTC milliseconds
  kind: EventKind;
  client: string;
  env_id?: string;
  asset_id?: string;
  content_id?: string;
}

export interface StatsRow {
  group_key: string;
  activations: number;
  complete_views: number;
  incomplete_views: number;
  unique_sessions: number;
  total_dwell_ms: number;
  mean_dwell_ms: number | null;
}

export interface StatsReport {
  grouping: string;
  window: { from: number; to: number };
  rows: StatsRow[];
}

export interface ValidationEntry {
  code: string;
  path: string;
  message: string;
}

export interface ValidationReport {
  errors: ValidationEntry[];
  warnings: ValidationEntry[];
}

export function reportOk(report: ValidationReport): boolean {
  return report.errors.length === 0;
}

export interface GatewayErrorBody {
  error: {
    code: string;
    message: string;
    path?: string;
    [extra: string]: unknown;
  };
  report?: ValidationReport;
}

/** Pick the best translation for the viewer's language preferences. */
export function pickLocalized(
  table: Record<string, string>,
  languages: string[],
  fallback: string,
): string {
  for (const lang of languages) {
    const hit = table[lang];
    if (hit !== undefined) return hit;
  }
  if (table[fallback] !== undefined) return table[fallback];
  const first = Object.keys(table)[0];
  return first === undefined ? "" : table[first];
}
