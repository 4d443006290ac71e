"""HTTP service surface: admin CRUD, bundle delivery, event ingestion,
stats, repo probing, and blob serving.

One shared manager bearer token guards everything a curator does; bundle,
event, and media endpoints are open to visitors. Every module error code
maps to exactly one HTTP status (see ERROR_STATUS), so clients can match on
codes instead of scraping messages.
"""

from __future__ import annotations

import base64
import binascii
import re
import uuid
from typing import Any, Mapping

from fastapi import FastAPI, Request, Response
from fastapi.responses import JSONResponse
from fastapi.staticfiles import StaticFiles

from .analytics import GROUPINGS, event_from_wire, export_report
from .engine import CAPABILITIES, VisitorContext, compile_tour_bundle, bundle_to_json
from .errors import (
    BatchTooLargeError,
    InvalidManifestError,
    MalformedEventError,
    MirandumError,
    NotFoundError,
    UnauthorizedError,
    UpstreamUnavailableError,
)
from .federation import FederationClient, HttpTransport, RepoSnapshot
from .model import (
    ExternalSource,
    TourManifest,
    manifest_from_dict,
    manifest_to_dict,
    report_to_dict,
    repository_to_dict,
    validate_tour,
)
from .workspace import Workspace

MAX_EVENT_BATCH = 1000

# Code -> HTTP status. Keys are exactly the module error codes plus the
# HTTP-boundary VALIDATION code for malformed requests; 4xx caller faults,
# 5xx store/transport faults.
ERROR_STATUS = {
    "VALIDATION": 422,
    "PITCH_RANGE": 422,
    "NON_FINITE": 422,
    "MANIFEST_PARSE": 422,
    "INVALID_MANIFEST": 422,
    "NOT_FOUND": 404,
    "EMPTY_PAYLOAD": 422,
    "DUPLICATE_CONTENT_ID": 409,
    "IO_FAILURE": 500,
    "CORRUPT_BLOB": 500,
    "STILL_REFERENCED": 409,
    "DUPLICATE_REPO_ID": 409,
    "MALFORMED_URI": 422,
    "UNKNOWN_REPO": 404,
    "OBJECT_TOO_LARGE": 502,
    "UPSTREAM_UNAVAILABLE": 502,
    "MALFORMED_EVENT": 422,
    "EMPTY_BUNDLE": 422,
    "SCRIPT_ILLEGAL_ACTION": 422,
    "UNAUTHORIZED": 401,
    "REVISION_CONFLICT": 409,
    "BATCH_TOO_LARGE": 413,
    "INTERNAL": 500,
}

_HASH_RE = re.compile(r"^[0-9a-f]{64}$")


class ApiError(Exception):
    """Request faults detected at the HTTP boundary itself."""

    def __init__(self, status: int, code: str, message: str,
                 path: str | None = None, **extra: Any) -> None:
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.path = path
        self.extra = extra


def _error_body(code: str, message: str, path: str | None = None,
                **extra: Any) -> dict[str, Any]:
    error: dict[str, Any] = {"code": code, "message": message}
    if path:
        error["path"] = path
    error.update(extra)
    return {"error": error}


def create_app(workspace: Workspace, *, token: str,
               transport: HttpTransport | None = None,
               ui_dir: str | None = None) -> FastAPI:
    """Build the service around one workspace. `token` is the single manager
    credential; `transport` is swappable for tests."""
    app = FastAPI(title="mirandum", docs_url=None, redoc_url=None,
                  openapi_url=None)
    app.state.workspace = workspace
    app.state.transport = transport or HttpTransport()
    app.state.snapshot = RepoSnapshot()

    @app.exception_handler(MirandumError)
    async def mirandum_error(_req: Request, exc: MirandumError) -> JSONResponse:
        status = ERROR_STATUS.get(exc.code, 500)
        body = _error_body(exc.code, exc.message, exc.path, **exc.details)
        if isinstance(exc, InvalidManifestError):
            body["report"] = report_to_dict(exc.report)
        return JSONResponse(body, status_code=status)

    @app.exception_handler(ApiError)
    async def api_error(_req: Request, exc: ApiError) -> JSONResponse:
        return JSONResponse(_error_body(exc.code, exc.message, exc.path,
                                        **exc.extra),
                            status_code=exc.status)

    def require_token(request: Request) -> None:
        supplied = request.headers.get("authorization", "")
        if supplied != f"Bearer {token}":
            raise UnauthorizedError("missing or wrong bearer token")

    async def json_body(request: Request) -> Any:
        try:
            return await request.json()
        except Exception:
            raise ApiError(422, "VALIDATION", "request body is not valid JSON")

    def federation(manifest: TourManifest) -> FederationClient:
        return FederationClient(manifest.external_repos, workspace.cache,
                                app.state.transport)

    # -- tours (admin) -----------------------------------------------------

    @app.get("/api/v1/tours")
    async def list_tours(request: Request) -> JSONResponse:
        require_token(request)
        return JSONResponse({"tours": workspace.list_tours()})

    @app.get("/api/v1/tours/{tour_id}")
    async def get_tour(request: Request, tour_id: str) -> JSONResponse:
        require_token(request)
        manifest = workspace.load_tour(tour_id)
        return JSONResponse({"manifest": manifest_to_dict(manifest),
                             "validation": report_to_dict(validate_tour(manifest))})

    @app.put("/api/v1/tours/{tour_id}")
    async def put_tour(request: Request, tour_id: str) -> JSONResponse:
        require_token(request)
        body = await json_body(request)
        if not isinstance(body, dict):
            raise ApiError(422, "VALIDATION", "manifest body must be an object")
        manifest = manifest_from_dict(body)
        if manifest.tour_id != tour_id:
            raise ApiError(422, "VALIDATION",
                           f"path names tour {tour_id!r} but manifest says "
                           f"{manifest.tour_id!r}")
        workspace.save_tour(manifest)
        workspace.audit("manager", "put_tour", tour=tour_id,
                        revision=manifest.revision)
        return JSONResponse({"revision": manifest.revision})

    @app.post("/api/v1/tours/{tour_id}/edits")
    async def post_edit(request: Request, tour_id: str) -> JSONResponse:
        require_token(request)
        body = await json_body(request)
        if not isinstance(body, dict) or not isinstance(body.get("edit"), dict):
            raise ApiError(422, "VALIDATION",
                           'body must be {"edit": {...}, ...}')
        expected = body.get("expected_revision")
        if expected is not None and not isinstance(expected, int):
            raise ApiError(422, "VALIDATION", "expected_revision must be an "
                           "integer", path="expected_revision")
        payload = None
        if body.get("payload_b64") is not None:
            try:
                payload = base64.b64decode(body["payload_b64"], validate=True)
            except (binascii.Error, TypeError, ValueError):
                raise ApiError(422, "VALIDATION", "payload_b64 is not valid "
                               "base64", path="payload_b64")
        revision = workspace.admin_edit(tour_id, body["edit"],
                                        expected_revision=expected,
                                        payload=payload, actor="manager")
        return JSONResponse({"revision": revision})

    # -- bundle (visitor) --------------------------------------------------

    @app.get("/api/v1/tours/{tour_id}/bundle")
    async def get_bundle(request: Request, tour_id: str) -> Response:
        manifest = workspace.load_tour(tour_id)
        report = validate_tour(manifest)
        if not report.ok:
            return JSONResponse(
                {**_error_body("INVALID_MANIFEST",
                               f"tour {tour_id!r} is not servable"),
                 "report": report_to_dict(report)},
                status_code=409)

        params = request.query_params
        languages = tuple(params.getlist("lang"))
        caps_param = params.get("caps")
        capabilities = (frozenset(c for c in caps_param.split(",") if c)
                        if caps_param is not None else frozenset(CAPABILITIES))
        access_param = params.get("access")
        accessibility = (frozenset(a for a in access_param.split(",") if a)
                         if access_param else frozenset())
        session_id = params.get("session") or f"v-{uuid.uuid4().hex}"

        client = federation(manifest)
        _prewarm(manifest, client)
        now = workspace.now_ms()

        def cache_view(repo_id: str, uri: str, ttl_s: float):
            return (workspace.cache.state(repo_id, uri, ttl_s, now),
                    workspace.cache.lookup(repo_id, uri))

        ctx = VisitorContext(session_id=session_id, languages=languages,
                             capabilities=capabilities,
                             accessibility=accessibility)
        bundle = compile_tour_bundle(manifest, ctx, app.state.snapshot,
                                     cache_view)
        return Response(content=bundle_to_json(bundle),
                        media_type="application/json",
                        headers={"X-Session-Id": session_id})

    def _prewarm(manifest: TourManifest, client: FederationClient) -> None:
        # downloadable externals are fetched ahead of compilation so served
        # bundles point at /media, never at the proxy; embeds stay remote
        bound = {content_id for _, content_id in _bindings(manifest)}
        for item in manifest.content_catalog:
            source = item.source
            if (isinstance(source, ExternalSource) and not source.embed
                    and item.content_id in bound):
                try:
                    client.fetch(source.repo_id, source.uri)
                except MirandumError:
                    pass  # compile falls back to proxy or drops the binding

    def _bindings(manifest: TourManifest):
        for asset in manifest.assets:
            for binding in asset.bindings:
                yield asset.asset_id, binding.content_id

    # -- events (visitor) ----------------------------------------------------

    @app.post("/api/v1/events")
    async def post_events(request: Request) -> JSONResponse:
        body = await json_body(request)
        if isinstance(body, dict):
            raw_events = body.get("events")
        else:
            raw_events = body
        if not isinstance(raw_events, list):
            raise ApiError(422, "VALIDATION",
                           'body must be a list or {"events": [...]}')
        if len(raw_events) > MAX_EVENT_BATCH:
            raise BatchTooLargeError(
                f"batch of {len(raw_events)} exceeds {MAX_EVENT_BATCH}",
                limit=MAX_EVENT_BATCH, got=len(raw_events))

        acks: list[dict[str, Any] | None] = [None] * len(raw_events)
        valid, positions = [], []
        for i, raw in enumerate(raw_events):
            try:
                if not isinstance(raw, Mapping):
                    raise MalformedEventError("event must be an object",
                                              field="event")
                valid.append(event_from_wire(raw))
                positions.append(i)
            except MalformedEventError as exc:
                event_id = raw.get("event_id") if isinstance(raw, Mapping) else None
                acks[i] = {"event_id": event_id if isinstance(event_id, str) else "",
                           "status": "rejected",
                           "error": {"code": exc.code,
                                     "field": exc.details.get("field", "")}}
        for pos, ack in zip(positions, workspace.events.append_batch(valid)):
            acks[pos] = ack
        stored = sum(1 for a in acks if a and a.get("status") == "stored")
        return JSONResponse({"acks": acks, "stored": stored})

    # -- stats (admin) -------------------------------------------------------

    @app.get("/api/v1/stats")
    async def get_stats(request: Request) -> Response:
        require_token(request)
        params = request.query_params
        grouping = params.get("group", "by_asset")
        if grouping in ("asset", "content", "content_kind", "environment"):
            grouping = f"by_{grouping}"  # accept the CLI's short names too
        if grouping not in GROUPINGS:
            raise ApiError(422, "VALIDATION",
                           f"group must be one of {', '.join(GROUPINGS)}",
                           path="group")

        def int_param(name: str, default: int | None) -> int | None:
            value = params.get(name)
            if value is None:
                return default
            try:
                return int(value)
            except ValueError:
                raise ApiError(422, "VALIDATION",
                               f"{name} must be integer milliseconds",
                               path=name)

        lo = int_param("from", 0)
        hi = int_param("to", None)
        window = (lo, hi if hi is not None else workspace.now_ms())
        if window[0] > window[1]:
            raise ApiError(422, "VALIDATION", "from must not exceed to",
                           path="from")
        gap = params.get("gap")
        try:
            gap_s = float(gap) if gap is not None else 1800.0
        except ValueError:
            raise ApiError(422, "VALIDATION", "gap must be seconds", path="gap")
        try:
            report = workspace.stats(grouping, window, gap_timeout_s=gap_s)
        except ValueError as exc:
            raise ApiError(422, "VALIDATION", str(exc))

        fmt = params.get("format", "json")
        if fmt == "csv":
            return Response(content=export_report(report, "csv"),
                            media_type="text/csv; charset=utf-8")
        if fmt == "table_text":
            return Response(content=export_report(report, "table_text"),
                            media_type="text/plain; charset=utf-8")
        if fmt != "json":
            raise ApiError(422, "VALIDATION",
                           "format must be json, csv, or table_text",
                           path="format")
        return JSONResponse({
            "grouping": report.grouping,
            "window": {"from": report.window[0], "to": report.window[1]},
            "rows": [{
                "group_key": r.key,
                "activations": r.activations,
                "complete_views": r.complete_views,
                "incomplete_views": r.incomplete_views,
                "unique_sessions": r.unique_sessions,
                "total_dwell_ms": r.total_dwell_ms,
                "mean_dwell_ms": r.mean_dwell_ms,
            } for r in report.rows],
        })

    # -- repos (admin) ---------------------------------------------------------

    def _all_repos() -> dict[str, tuple[Any, list[str]]]:
        repos: dict[str, tuple[Any, list[str]]] = {}
        for tour_id in workspace.list_tours():
            for repo in workspace.load_tour(tour_id).external_repos:
                entry = repos.setdefault(repo.repo_id, (repo, []))
                entry[1].append(tour_id)
        return repos

    @app.get("/api/v1/repos")
    async def list_repos(request: Request) -> JSONResponse:
        require_token(request)
        snapshot: RepoSnapshot = app.state.snapshot
        out = []
        for repo_id, (repo, tours) in sorted(_all_repos().items()):
            status = snapshot.statuses.get(repo_id)
            out.append({
                **repository_to_dict(repo),
                "tours": tours,
                "last_probe": None if status is None else {
                    "reachable": status.reachable,
                    "probed_at_ms": status.probed_at_ms,
                    "latency_ms": status.latency_ms,
                    "error": status.error,
                },
            })
        return JSONResponse({"repos": out})

    @app.post("/api/v1/repos/probe")
    async def probe_repos(request: Request) -> JSONResponse:
        require_token(request)
        repos = [repo for repo, _ in _all_repos().values()]
        client = FederationClient(repos, workspace.cache, app.state.transport)
        snapshot = client.probe_all()
        app.state.snapshot = snapshot
        return JSONResponse({"statuses": [{
            "repo_id": s.repo_id,
            "reachable": s.reachable,
            "probed_at_ms": s.probed_at_ms,
            "latency_ms": s.latency_ms,
            "error": s.error,
        } for s in sorted(snapshot.statuses.values(),
                          key=lambda s: s.repo_id)]})

    # -- media (visitor) ---------------------------------------------------------

    @app.get("/media/{blob_hash}")
    async def get_media(blob_hash: str) -> Response:
        if not _HASH_RE.fullmatch(blob_hash):
            raise NotFoundError(f"not a blob hash: {blob_hash!r}")
        data = workspace.store.get_blob(blob_hash)
        return Response(content=data,
                        media_type=workspace.media_type_for(blob_hash),
                        headers={"Cache-Control": "public, max-age=31536000, "
                                                  "immutable"})

    @app.get("/external/{repo_id}")
    async def proxy_external(request: Request, repo_id: str) -> Response:
        uri = request.query_params.get("uri")
        if not uri:
            raise ApiError(422, "VALIDATION", "uri query parameter required",
                           path="uri")
        for tour_id in workspace.list_tours():
            manifest = workspace.load_tour(tour_id)
            if manifest.repo(repo_id) is not None:
                result = federation(manifest).fetch(repo_id, uri)
                if result.status == "unavailable":
                    raise UpstreamUnavailableError(
                        f"repository {repo_id!r} cannot serve {uri!r}",
                        repo_id=repo_id, uri=uri)
                media_type = (result.payload_ref.media_type
                              if result.payload_ref else "application/octet-stream")
                return Response(content=result.data, media_type=media_type)
        raise NotFoundError(f"no tour references repository {repo_id!r}")

    if ui_dir:
        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
