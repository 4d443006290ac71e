"""Command-line manager tooling.

Every mutating subcommand goes through the same edit pipeline whether it
talks to a local store root (``--store``) or a live gateway (``--remote``),
so the observable state after a command sequence is identical either way.

Exit codes: 0 success, 1 validation or domain errors (report printed),
2 usage errors.
"""

from __future__ import annotations

import argparse
import base64
import hashlib
import json
import mimetypes
import os
import sys
from pathlib import Path
from typing import Any, Mapping, Sequence

from .analytics import (
    GROUPINGS,
    InteractionEvent,
    StatsReport,
    StatsRow,
    event_to_wire,
    export_report,
)
from .engine import CAPABILITIES, compile_tour_bundle, VisitorContext
from .errors import InvalidManifestError, MirandumError
from .federation import FederationClient, RepoSnapshot, RepoStatus
from .fixture import install_demo
from .model import (
    KIND_PRESENTATION,
    MARKER_STYLES,
    ReportEntry,
    ValidationReport,
    load_tour_file,
    manifest_from_dict,
    manifest_to_dict,
    validate_tour,
)
from .reporting import render_report_figures
from .simulator import WalkPolicy, WalkResult, events_to_jsonl, run_walk
from .workspace import Workspace

PROG = "mirandum"
EVENT_POST_BATCH = 500  # stay well under the gateway's 1000-event cap
ASPECT_RATIO = 2.0
ASPECT_TOLERANCE = 0.02

_SHORT_GROUPS = ("asset", "content", "content_kind", "environment")


class UsageError(Exception):
    """Bad invocation that argparse cannot catch on its own; exits 2."""


class GatewayError(Exception):
    """An error response from a remote gateway, carrying its code and body."""

    def __init__(self, status: int, code: str, message: str,
                 body: Mapping[str, Any]):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.body = body


# ---------------------------------------------------------------------------
# backends: one surface, two transports


class LocalBackend:
    """Runs commands directly against a workspace directory."""

    def __init__(self, store_root: str | Path):
        self.ws = Workspace(store_root)

    def list_tours(self) -> list[str]:
        return self.ws.list_tours()

    def manifest(self, tour_id: str):
        return self.ws.load_tour(tour_id)

    def validation(self, tour_id: str) -> ValidationReport:
        return validate_tour(self.ws.load_tour(tour_id))

    def edit(self, tour_id: str, edit: Mapping[str, Any],
             payload: bytes | None = None,
             expected_revision: int | None = None) -> int:
        return self.ws.admin_edit(tour_id, edit, payload=payload,
                                  expected_revision=expected_revision,
                                  actor="cli")

    def stats(self, grouping: str, window: tuple[int, int] | None,
              gap_s: float) -> StatsReport:
        return self.ws.stats(grouping, window, gap_timeout_s=gap_s)

    def probe(self) -> list[dict[str, Any]]:
        repos: dict[str, Any] = {}
        for tour_id in self.ws.list_tours():
            for repo in self.ws.load_tour(tour_id).external_repos:
                repos.setdefault(repo.repo_id, repo)
        client = FederationClient(repos.values(), self.ws.cache)
        snapshot = client.probe_all()
        return [_status_dict(s) for s in
                sorted(snapshot.statuses.values(), key=lambda s: s.repo_id)]

    def bundle(self, tour_id: str, languages: tuple[str, ...]) -> dict[str, Any]:
        manifest = self.ws.load_tour(tour_id)
        ctx = VisitorContext(session_id="sim", languages=languages)
        return compile_tour_bundle(manifest, ctx, RepoSnapshot())


def _status_dict(s: RepoStatus) -> dict[str, Any]:
    return {"repo_id": s.repo_id, "reachable": s.reachable,
            "probed_at_ms": s.probed_at_ms, "latency_ms": s.latency_ms,
            "error": s.error}


class RemoteBackend:
    """Runs commands against a live gateway over HTTP."""

    def __init__(self, base_url: str, token: str | None):
        import requests

        self.base = base_url.rstrip("/")
        self.token = token
        self.http = requests.Session()

    def _call(self, method: str, path: str, *, auth: bool = True,
              **kwargs: Any):
        headers = kwargs.pop("headers", {})
        if auth:
            if not self.token:
                raise UsageError(
                    "admin commands against a gateway need a token "
                    "(--token env:VAR or MIRANDUM_TOKEN)")
            headers["Authorization"] = f"Bearer {self.token}"
        resp = self.http.request(method, self.base + path, headers=headers,
                                 timeout=30, **kwargs)
        if resp.status_code >= 400:
            try:
                body = resp.json()
            except ValueError:
                body = {}
            err = body.get("error", {}) if isinstance(body, dict) else {}
            raise GatewayError(resp.status_code,
                               err.get("code", "INTERNAL"),
                               err.get("message", f"HTTP {resp.status_code}"),
                               body if isinstance(body, dict) else {})
        return resp

    def list_tours(self) -> list[str]:
        return self._call("GET", "/api/v1/tours").json()["tours"]

    def manifest(self, tour_id: str):
        data = self._call("GET", f"/api/v1/tours/{tour_id}").json()
        return manifest_from_dict(data["manifest"])

    def validation(self, tour_id: str) -> ValidationReport:
        data = self._call("GET", f"/api/v1/tours/{tour_id}").json()
        raw = data["validation"]
        return ValidationReport(
            errors=tuple(ReportEntry(**e) for e in raw["errors"]),
            warnings=tuple(ReportEntry(**w) for w in raw["warnings"]))

    def edit(self, tour_id: str, edit: Mapping[str, Any],
             payload: bytes | None = None,
             expected_revision: int | None = None) -> int:
        body: dict[str, Any] = {"edit": dict(edit)}
        if expected_revision is not None:
            body["expected_revision"] = expected_revision
        if payload is not None:
            body["payload_b64"] = base64.b64encode(payload).decode("ascii")
        resp = self._call("POST", f"/api/v1/tours/{tour_id}/edits", json=body)
        return resp.json()["revision"]

    def stats(self, grouping: str, window: tuple[int, int] | None,
              gap_s: float) -> StatsReport:
        params: dict[str, Any] = {"group": grouping, "gap": gap_s,
                                  "format": "json"}
        if window is not None:
            params["from"], params["to"] = window
        data = self._call("GET", "/api/v1/stats", params=params).json()
        rows = tuple(StatsRow(key=r["group_key"],
                              activations=r["activations"],
                              complete_views=r["complete_views"],
                              incomplete_views=r["incomplete_views"],
                              unique_sessions=r["unique_sessions"],
                              total_dwell_ms=r["total_dwell_ms"],
                              mean_dwell_ms=r["mean_dwell_ms"])
                     for r in data["rows"])
        return StatsReport(grouping=data["grouping"],
                           window=(data["window"]["from"],
                                   data["window"]["to"]),
                           rows=rows)

    def probe(self) -> list[dict[str, Any]]:
        return self._call("POST", "/api/v1/repos/probe").json()["statuses"]

    def bundle(self, tour_id: str, languages: tuple[str, ...]) -> dict[str, Any]:
        params = [("lang", lang) for lang in languages]
        resp = self._call("GET", f"/api/v1/tours/{tour_id}/bundle",
                          params=params, auth=False)
        return resp.json()

    def post_events(self, events: Sequence[InteractionEvent]) -> int:
        """Send events in order, in bounded batches; returns count stored."""
        stored = 0
        wire = [event_to_wire(e) for e in events]
        for i in range(0, len(wire), EVENT_POST_BATCH):
            chunk = wire[i:i + EVENT_POST_BATCH]
            resp = self._call("POST", "/api/v1/events",
                              json={"events": chunk}, auth=False)
            stored += resp.json()["stored"]
        return stored


# ---------------------------------------------------------------------------
# shared plumbing


def resolve_token(spec: str | None) -> str | None:
    """``env:VAR`` reads VAR from the environment; anything else is literal.
    Unset spec falls back to MIRANDUM_TOKEN."""
    if spec is None:
        return os.environ.get("MIRANDUM_TOKEN")
    if spec.startswith("env:"):
        name = spec[4:]
        value = os.environ.get(name)
        if not value:
            raise UsageError(f"environment variable {name} is not set")
        return value
    return spec


def make_backend(args: argparse.Namespace):
    if args.remote:
        return RemoteBackend(args.remote, resolve_token(args.token))
    if not args.store:
        raise UsageError("no store: pass --store PATH, set MIRANDUM_STORE, "
                         "or use --remote URL")
    return LocalBackend(args.store)


def pick_tour(backend, tour_id: str | None) -> str:
    """Use the named tour, or the only one there is."""
    if tour_id:
        return tour_id
    tours = backend.list_tours()
    if len(tours) == 1:
        return tours[0]
    if not tours:
        raise UsageError("no tours found; create one with init --demo")
    raise UsageError(f"several tours ({', '.join(tours)}); pass a tour id")


def parse_labels(pairs: Sequence[str], flag: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for pair in pairs:
        lang, sep, text = pair.partition("=")
        if not sep or not lang:
            raise UsageError(f"{flag} takes lang=text, got {pair!r}")
        out[lang] = text
    return out


def print_report(report: ValidationReport, file=None) -> None:
    file = file or sys.stdout
    for entry in report.errors:
        print(f"error  {entry.code:<22} {entry.path}: {entry.message}",
              file=file)
    for entry in report.warnings:
        print(f"warn   {entry.code:<22} {entry.path}: {entry.message}",
              file=file)
    print(f"{len(report.errors)} errors, {len(report.warnings)} warnings",
          file=file)


def _normalize_group(name: str) -> str:
    return f"by_{name}" if name in _SHORT_GROUPS else name


# ---------------------------------------------------------------------------
# subcommands


def cmd_init(args: argparse.Namespace) -> int:
    if args.remote:
        raise UsageError("init creates a local store; it has no remote form")
    if not args.store:
        raise UsageError("init needs --store PATH or MIRANDUM_STORE")
    ws = Workspace(args.store)
    if args.demo:
        manifest = install_demo(ws)
        print(f"initialized store {ws.root} with demo tour "
              f"{manifest.tour_id!r}")
    else:
        print(f"initialized empty store {ws.root}")
    return 0


def cmd_validate(args: argparse.Namespace) -> int:
    if args.file:
        report = validate_tour(load_tour_file(args.file))
    else:
        backend = make_backend(args)
        report = backend.validation(pick_tour(backend, args.tour))
    print_report(report)
    return 0 if report.ok else 1


def cmd_import_panorama(args: argparse.Namespace) -> int:
    from PIL import Image, UnidentifiedImageError

    path = Path(args.image)
    try:
        with Image.open(path) as img:
            fmt, (width, height) = img.format, img.size
    except (FileNotFoundError, UnidentifiedImageError) as exc:
        print(f"cannot read panorama: {exc}", file=sys.stderr)
        return 1
    if fmt not in ("JPEG", "PNG"):
        print(f"panorama must be JPEG or PNG, not {fmt}", file=sys.stderr)
        return 1
    if height == 0 or abs(width / height - ASPECT_RATIO) > ASPECT_TOLERANCE:
        print(f"panorama must be 2:1 equirectangular, got {width}x{height}",
              file=sys.stderr)
        return 1

    data = path.read_bytes()
    media_type = "image/jpeg" if fmt == "JPEG" else "image/png"
    backend = make_backend(args)
    tour_id = pick_tour(backend, args.tour)

    # keep links/labels of an existing environment unless flags say otherwise
    manifest = backend.manifest(tour_id)
    existing = next((e for e in manifest.environments
                     if e.env_id == args.env_id), None)
    from .model import environment_to_dict

    if existing is not None:
        env = environment_to_dict(existing)
    else:
        env = {"env_id": args.env_id, "name": {}, "nav_links": [],
               "initial_view": {"yaw": 0.0, "pitch": 0.0}, "is_entry": False}
    env["panorama"] = {"locator": f"blob:sha256:{hashlib.sha256(data).hexdigest()}",
                       "width": width, "height": height,
                       "media_type": media_type}
    if args.name:
        env["name"] = parse_labels(args.name, "--name")
    elif not env["name"]:
        env["name"] = {"und": args.env_id}
    if args.entry:
        env["is_entry"] = True
    if args.yaw is not None or args.pitch is not None:
        env["initial_view"] = {"yaw": args.yaw or 0.0,
                               "pitch": args.pitch or 0.0}

    revision = backend.edit(tour_id, {"op": "upsert_environment",
                                      "environment": env}, payload=data)
    print(f"imported {width}x{height} {media_type} panorama as environment "
          f"{args.env_id!r} (revision {revision})")
    return 0


def cmd_add_asset(args: argparse.Namespace) -> int:
    backend = make_backend(args)
    tour_id = pick_tour(backend, args.tour)
    manifest = backend.manifest(tour_id)
    existing = next((a for a in manifest.assets
                     if a.asset_id == args.asset_id), None)
    bindings = ([{"content_id": b.content_id, "presentation": b.presentation}
                 for b in existing.bindings] if existing else [])
    asset = {
        "asset_id": args.asset_id,
        "environment_id": args.env,
        "anchor": {"yaw": args.yaw, "pitch": args.pitch},
        "marker_style": args.style,
        "label": parse_labels(args.label, "--label") or {"und": args.asset_id},
        "bindings": bindings,
    }
    revision = backend.edit(tour_id, {"op": "upsert_asset", "asset": asset})
    print(f"asset {args.asset_id!r} at yaw {args.yaw} pitch {args.pitch} in "
          f"{args.env!r} (revision {revision})")
    return 0


def cmd_map(args: argparse.Namespace) -> int:
    backend = make_backend(args)
    tour_id = pick_tour(backend, args.tour)
    edit = {"op": "map_binding", "asset_id": args.asset_id,
            "content_id": args.content_id, "presentation": args.presentation}
    revision = backend.edit(tour_id, edit)
    print(f"mapped {args.content_id!r} -> {args.asset_id!r} as "
          f"{args.presentation} (revision {revision})")
    return 0


def cmd_put_content(args: argparse.Namespace) -> int:
    if bool(args.file) == bool(args.uri):
        raise UsageError("put-content takes exactly one of --file or "
                         "--external-repo/--uri")
    if args.uri and not args.external_repo:
        raise UsageError("--uri needs --external-repo")

    item: dict[str, Any] = {
        "content_id": args.content_id,
        "kind": args.kind,
        "language": args.language,
        "title": args.title or args.content_id,
        "credits": args.credits or "",
    }
    if args.variant_group:
        item["variant_group"] = args.variant_group
    if args.captions:
        item["captions"] = True

    payload: bytes | None = None
    edit: dict[str, Any] = {"op": "put_content"}
    if args.file:
        payload = Path(args.file).read_bytes()
        media_type = (args.media_type
                      or mimetypes.guess_type(args.file)[0]
                      or "application/octet-stream")
        item["source"] = {"type": "internal", "payload": {
            "hash": hashlib.sha256(payload).hexdigest(),
            "size": len(payload), "media_type": media_type}}
    else:
        item["source"] = {"type": "external", "repo_id": args.external_repo,
                          "uri": args.uri, "embed": args.embed}
        if args.repo_base:
            edit["repo"] = {
                "repo_id": args.external_repo,
                "owner": args.repo_owner or args.external_repo,
                "base_uri": args.repo_base,
                "cache_policy": {"mode": args.repo_mode, "ttl": args.repo_ttl,
                                 "max_object_bytes": args.repo_max_bytes},
            }

    edit["item"] = item
    backend = make_backend(args)
    tour_id = pick_tour(backend, args.tour)
    revision = backend.edit(tour_id, edit, payload=payload)
    where = "stored" if payload else f"external via {args.external_repo!r}"
    print(f"content {args.content_id!r} ({args.kind}) {where} "
          f"(revision {revision})")
    return 0


def cmd_rm(args: argparse.Namespace) -> int:
    if args.target == "binding" and not args.asset:
        raise UsageError("rm --target binding needs --asset ASSET_ID")
    edit: dict[str, Any] = {"op": "remove", "target": args.target,
                            "id": args.id}
    if args.target == "binding":
        edit["asset_id"] = args.asset
    backend = make_backend(args)
    tour_id = pick_tour(backend, args.tour)
    revision = backend.edit(tour_id, edit)
    print(f"removed {args.target} {args.id!r} (revision {revision})")
    return 0


def cmd_stats(args: argparse.Namespace) -> int:
    import time

    backend = make_backend(args)
    window = None
    if args.from_ms is not None or args.to_ms is not None:
        lo = args.from_ms if args.from_ms is not None else 0
        hi = (args.to_ms if args.to_ms is not None
              else time.time_ns() // 1_000_000)
        window = (lo, hi)
    report = backend.stats(_normalize_group(args.group), window, args.gap)
    if args.format == "csv":
        sys.stdout.buffer.write(export_report(report, "csv"))
        sys.stdout.buffer.flush()
    else:
        sys.stdout.write(export_report(report, "table_text").decode("utf-8"))
    if args.figures:
        # keep stdout machine-readable; file listing goes to stderr
        for path in render_report_figures(report, args.figures):
            print(f"figure: {path}", file=sys.stderr)
    return 0


def cmd_probe(args: argparse.Namespace) -> int:
    backend = make_backend(args)
    statuses = backend.probe()
    if args.format == "csv":
        import csv
        import io

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\r\n")
        writer.writerow(["repo_id", "reachable", "latency_ms", "error"])
        for s in statuses:
            writer.writerow([s["repo_id"], str(s["reachable"]).lower(),
                             "" if s["latency_ms"] is None else s["latency_ms"],
                             s["error"] or ""])
        sys.stdout.write(buf.getvalue())
    else:
        for s in statuses:
            if s["reachable"]:
                rtt = (f"{s['latency_ms']:.1f} ms"
                       if s["latency_ms"] is not None else "")
                print(f"{s['repo_id']:<24} reachable    {rtt}".rstrip())
            else:
                why = f" ({s['error']})" if s["error"] else ""
                print(f"{s['repo_id']:<24} unreachable{why}")
        if not statuses:
            print("no external repositories configured")
    return 0


def cmd_serve(args: argparse.Namespace) -> int:
    import uvicorn

    from .gateway import create_app

    if args.remote:
        raise UsageError("serve runs from a local store; --remote makes "
                         "no sense here")
    if not args.store:
        raise UsageError("serve needs --store PATH or MIRANDUM_STORE")
    token = resolve_token(args.token)
    if not token:
        raise UsageError("serve needs a manager token (--token env:VAR or "
                         "MIRANDUM_TOKEN)")
    ui_dir = args.ui
    if ui_dir is None:
        candidate = Path(__file__).resolve().parents[2] / "frontend" / "dist"
        ui_dir = str(candidate) if candidate.is_dir() else None
    app = create_app(Workspace(args.store), token=token, ui_dir=ui_dir)
    uvicorn.run(app, host=args.host, port=args.port, log_level="warning")
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    live = args.target.startswith(("http://", "https://"))
    if live:
        backend = RemoteBackend(args.target, resolve_token(args.token))
        tour_id = args.tour
        if not tour_id:
            raise UsageError("simulate against a gateway needs --tour")
    else:
        backend = make_backend(args)
        tour_id = pick_tour(backend, args.tour)

    bundle = backend.bundle(tour_id, tuple(args.lang))

    if args.script:
        steps = json.loads(Path(args.script).read_text(encoding="utf-8"))
        if not isinstance(steps, list):
            raise UsageError("script file must hold a JSON array of steps")
        policies = [WalkPolicy(mode="scripted", script=tuple(steps),
                               session_id=f"script-{i}" if args.walkers > 1
                               else None)
                    for i in range(args.walkers)]
    else:
        policies = [WalkPolicy(mode="random", seed=args.seed + i,
                               dwell_model=(args.dwell_min, args.dwell_max),
                               activation_probability=args.activation_probability,
                               max_events=args.max_events)
                    for i in range(args.walkers)]

    results: list[WalkResult] = [run_walk(bundle, p) for p in policies]
    all_events = [e for r in results for e in r.events]

    if live:
        stored = backend.post_events(all_events)
        destination = f"posted {stored} events to {args.target}"
    else:
        out = Path(args.target)
        out.parent.mkdir(parents=True, exist_ok=True)
        with open(out, "ab") as fh:
            fh.write(events_to_jsonl(all_events))
        destination = f"wrote {len(all_events)} events to {out}"

    for r in results:
        if args.transcript:
            print(r.transcript)
        print(f"{r.session_id}: {len(r.events)} events, "
              f"{r.closed_views} closed views")
    total_closed = sum(r.closed_views for r in results)
    print(f"{destination}; {len(results)} walker(s), "
          f"{total_closed} closed views total")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog=PROG,
        description="Manage virtual-museum tours: stores, content, stats, "
                    "federation, serving, and simulated visitors.")
    parser.add_argument("--store", default=os.environ.get("MIRANDUM_STORE"),
                        help="local store root (default: $MIRANDUM_STORE)")
    parser.add_argument("--remote", help="gateway base URL instead of a "
                        "local store")
    parser.add_argument("--token", help="manager bearer token, or env:VAR "
                        "(default: $MIRANDUM_TOKEN)")
    parser.add_argument("--format", choices=("csv", "plain"), default="plain",
                        help="machine-readable output where applicable")
    sub = parser.add_subparsers(dest="command", required=True, metavar="CMD")

    p = sub.add_parser("init", help="create a store root")
    p.add_argument("--demo", action="store_true",
                   help="install the demo tour")
    p.set_defaults(func=cmd_init)

    p = sub.add_parser("validate", help="validate a tour or manifest file")
    p.add_argument("tour", nargs="?", help="tour id (default: the only one)")
    p.add_argument("--file", help="validate a manifest JSON file directly")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("import-panorama",
                       help="add or replace an environment's panorama")
    p.add_argument("env_id")
    p.add_argument("image", help="JPEG or PNG equirectangular image, 2:1")
    p.add_argument("--tour")
    p.add_argument("--name", action="append", default=[],
                   metavar="LANG=TEXT")
    p.add_argument("--entry", action="store_true",
                   help="mark as the tour's entry environment")
    p.add_argument("--yaw", type=float, default=None)
    p.add_argument("--pitch", type=float, default=None)
    p.set_defaults(func=cmd_import_panorama)

    p = sub.add_parser("add-asset", help="place an interactive marker")
    p.add_argument("asset_id")
    p.add_argument("--tour")
    p.add_argument("--env", required=True, help="environment to anchor in")
    p.add_argument("--yaw", type=float, required=True)
    p.add_argument("--pitch", type=float, required=True)
    p.add_argument("--style", choices=MARKER_STYLES, default="dot")
    p.add_argument("--label", action="append", default=[],
                   metavar="LANG=TEXT")
    p.set_defaults(func=cmd_add_asset)

    p = sub.add_parser("map", help="bind content to an asset")
    p.add_argument("asset_id")
    p.add_argument("content_id")
    p.add_argument("presentation",
                   help=f"one of: {', '.join(sorted(set(KIND_PRESENTATION.values())))}")
    p.add_argument("--tour")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("put-content", help="add content to the catalog")
    p.add_argument("content_id")
    p.add_argument("--tour")
    p.add_argument("--kind", required=True,
                   choices=tuple(KIND_PRESENTATION))
    p.add_argument("--language", default="und")
    p.add_argument("--title")
    p.add_argument("--credits")
    p.add_argument("--variant-group")
    p.add_argument("--captions", action="store_true")
    p.add_argument("--file", help="payload file for internal content")
    p.add_argument("--media-type")
    p.add_argument("--external-repo", metavar="REPO_ID")
    p.add_argument("--uri", help="object URI within the external repo")
    p.add_argument("--embed", action="store_true",
                   help="render in place; never downloaded")
    p.add_argument("--repo-base", metavar="URL",
                   help="register the repo with this base URI")
    p.add_argument("--repo-owner")
    p.add_argument("--repo-mode", default="prefer_cache",
                   choices=("always_fetch", "prefer_cache", "cache_only"))
    p.add_argument("--repo-ttl", type=float, default=86400.0)
    p.add_argument("--repo-max-bytes", type=int, default=64 * 1024 * 1024)
    p.set_defaults(func=cmd_put_content)

    p = sub.add_parser("rm", help="remove content, assets, or environments")
    p.add_argument("id")
    p.add_argument("--tour")
    p.add_argument("--target", default="content",
                   choices=("content", "asset", "environment", "binding",
                            "repository"))
    p.add_argument("--asset", help="owning asset when removing a binding")
    p.set_defaults(func=cmd_rm)

    p = sub.add_parser("stats", help="aggregate interaction statistics")
    p.add_argument("--tour")  # accepted for symmetry; stats are store-wide
    p.add_argument("--group", default="content_kind",
                   choices=_SHORT_GROUPS + GROUPINGS)
    p.add_argument("--from", dest="from_ms", type=int, default=None,
                   metavar="MS")
    p.add_argument("--to", dest="to_ms", type=int, default=None, metavar="MS")
    p.add_argument("--gap", type=float, default=1800.0,
                   help="session gap timeout, seconds")
    p.add_argument("--figures", metavar="DIR",
                   help="also render charts as PNG files under DIR")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("probe", help="probe external repositories")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("serve", help="run the gateway")
    p.add_argument("--host", default="127.0.0.1")
    p.add_argument("--port", type=int, default=8000)
    p.add_argument("--ui", help="directory of viewer UI files to serve "
                   "at /ui")
    p.set_defaults(func=cmd_serve)

    p = sub.add_parser("simulate", help="run simulated visitors")
    p.add_argument("--tour")
    p.add_argument("--target", required=True,
                   help="gateway URL to post to, or a logfile path")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--script", help="JSON file with a scripted walk")
    p.add_argument("--walkers", type=int, default=1, metavar="N")
    p.add_argument("--max-events", type=int, default=100)
    p.add_argument("--dwell-min", type=int, default=1000)
    p.add_argument("--dwell-max", type=int, default=8000)
    p.add_argument("--activation-probability", type=float, default=0.6)
    p.add_argument("--lang", action="append", default=[],
                   help="language preference for the walked bundle")
    p.add_argument("--transcript", action="store_true",
                   help="print each walker's transcript")
    p.set_defaults(func=cmd_simulate)

    return parser


def main(argv: Sequence[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 2
    except InvalidManifestError as exc:
        print_report(exc.report, file=sys.stderr)
        return 1
    except MirandumError as exc:
        detail = ""
        if exc.details.get("asset_ids"):
            detail = f" (bound by: {', '.join(exc.details['asset_ids'])})"
        print(f"{exc.code}: {exc.message}{detail}", file=sys.stderr)
        return 1
    except GatewayError as exc:
        if exc.code == "INVALID_MANIFEST" and "report" in exc.body:
            raw = exc.body["report"]
            report = ValidationReport(
                errors=tuple(ReportEntry(**e) for e in raw["errors"]),
                warnings=tuple(ReportEntry(**w) for w in raw["warnings"]))
            print_report(report, file=sys.stderr)
            return 1
        detail = ""
        err = exc.body.get("error", {})
        if err.get("asset_ids"):
            detail = f" (bound by: {', '.join(err['asset_ids'])})"
        print(f"{exc.code}: {exc.message}{detail}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"{PROG}: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
