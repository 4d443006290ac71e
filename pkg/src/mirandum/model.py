"""Tour data model: environments, assets, content catalog, and validation.

A tour manifest is one JSON document (UTF-8, ``schema_version: 1``) holding
everything a museum needs to serve a virtual visit: the 360-degree
environments, the assets anchored inside them, the content catalog those
assets bind to, and the external repositories some contents live in.

Enumerated fields are stored as plain strings and checked by
``validate_tour`` so that a defective manifest parses into a full report
instead of dying on the first bad value.
"""

from __future__ import annotations

import json
import math
import re
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Any, Iterable, Mapping

from .errors import ManifestParseError, NonFiniteError, PitchRangeError

SCHEMA_VERSION = 1

CONTENT_KINDS = ("text", "image", "audio", "video", "object3d", "game")
PRESENTATIONS = (
    "popup_text",
    "popup_video",
    "overlay_image",
    "audio_play",
    "model_3d_view",
    "game_launch",
)
MARKER_STYLES = ("dot", "ring", "label")
CACHE_MODES = ("always_fetch", "prefer_cache", "cache_only")

# kind -> the one presentation compatible with it
KIND_PRESENTATION = {
    "text": "popup_text",
    "image": "overlay_image",
    "audio": "audio_play",
    "video": "popup_video",
    "object3d": "model_3d_view",
    "game": "game_launch",
}

_LANG_TAG_RE = re.compile(r"^[A-Za-z]{1,8}(?:-[A-Za-z0-9]{1,8})*$")
_HEX256_RE = re.compile(r"^[0-9a-f]{64}$")

# 2:1 equirectangular aspect, tolerance on the ratio itself
ASPECT_RATIO = 2.0
ASPECT_TOLERANCE = 0.02


# ---------------------------------------------------------------------------
# types


@dataclass(frozen=True)
class Direction:
    """Spherical anchor on the panorama: yaw in [0, 360), pitch in [-90, +90]."""

    yaw: float
    pitch: float


def normalize_direction(yaw_raw: float, pitch_raw: float) -> Direction:
    """Wrap yaw into [0, 360) and carry pitch through unchanged.

    Raises NonFiniteError for NaN/inf inputs and PitchRangeError when pitch
    falls outside the closed [-90, +90] interval.
    """
    if not (math.isfinite(yaw_raw) and math.isfinite(pitch_raw)):
        raise NonFiniteError(f"direction components must be finite, got ({yaw_raw}, {pitch_raw})")
    if not -90.0 <= pitch_raw <= 90.0:
        raise PitchRangeError(f"pitch {pitch_raw} outside [-90, +90]")
    yaw = yaw_raw % 360.0
    if yaw >= 360.0:  # float rounding can push tiny negatives to exactly 360.0
        yaw = 0.0
    return Direction(yaw=yaw, pitch=pitch_raw)


@dataclass(frozen=True)
class PanoramaSource:
    """Locator plus declared pixel dimensions of an equirectangular image.

    ``locator`` is either ``blob:sha256:<hash>`` for store-managed images or a
    path relative to the manifest file. Dimensions are declared here so
    validation never has to open image files.
    """

    locator: str
    width: int
    height: int
    media_type: str = "image/jpeg"


@dataclass(frozen=True)
class NavLink:
    direction: Direction
    target: str


@dataclass(frozen=True)
class Environment:
    env_id: str
    name: Mapping[str, str]
    panorama: PanoramaSource
    initial_view: Direction = Direction(0.0, 0.0)
    nav_links: tuple[NavLink, ...] = ()
    is_entry: bool = False


@dataclass(frozen=True)
class ContentBinding:
    content_id: str
    presentation: str


@dataclass(frozen=True)
class Asset:
    """A marker anchored in one environment; bindings are in priority order."""

    asset_id: str
    environment_id: str
    anchor: Direction
    marker_style: str = "dot"
    label: Mapping[str, str] = field(default_factory=dict)
    bindings: tuple[ContentBinding, ...] = ()


@dataclass(frozen=True)
class PayloadRef:
    """Content address of a stored payload: sha256 hex digest, size, MIME type."""

    hash: str
    size: int
    media_type: str


@dataclass(frozen=True)
class InternalSource:
    payload: PayloadRef


@dataclass(frozen=True)
class ExternalSource:
    repo_id: str
    uri: str
    embed: bool = False


@dataclass(frozen=True)
class ContentItem:
    content_id: str
    kind: str
    language: str
    title: str
    credits: str
    source: InternalSource | ExternalSource
    variant_group: str | None = None
    captions: bool = False


@dataclass(frozen=True)
class CachePolicy:
    mode: str = "prefer_cache"
    ttl: float = 86400.0
    max_object_bytes: int = 64 * 1024 * 1024


@dataclass(frozen=True)
class ExternalRepository:
    repo_id: str
    owner: str
    base_uri: str
    cache_policy: CachePolicy = CachePolicy()


@dataclass(frozen=True)
class TourManifest:
    tour_id: str
    title: Mapping[str, str]
    default_language: str
    environments: tuple[Environment, ...] = ()
    assets: tuple[Asset, ...] = ()
    content_catalog: tuple[ContentItem, ...] = ()
    external_repos: tuple[ExternalRepository, ...] = ()
    schema_version: int = SCHEMA_VERSION
    revision: int = 0

    def environment(self, env_id: str) -> Environment | None:
        for env in self.environments:
            if env.env_id == env_id:
                return env
        return None

    def asset(self, asset_id: str) -> Asset | None:
        for a in self.assets:
            if a.asset_id == asset_id:
                return a
        return None

    def content(self, content_id: str) -> ContentItem | None:
        for c in self.content_catalog:
            if c.content_id == content_id:
                return c
        return None

    def repo(self, repo_id: str) -> ExternalRepository | None:
        for r in self.external_repos:
            if r.repo_id == repo_id:
                return r
        return None

    def entry_environment(self) -> Environment | None:
        for env in self.environments:
            if env.is_entry:
                return env
        return None


@dataclass(frozen=True)
class ReportEntry:
    code: str
    path: str
    message: str


@dataclass(frozen=True)
class ValidationReport:
    errors: tuple[ReportEntry, ...]
    warnings: tuple[ReportEntry, ...]

    @property
    def ok(self) -> bool:
        return not self.errors

    def error_codes(self) -> list[str]:
        return [e.code for e in self.errors]


# ---------------------------------------------------------------------------
# validation


def report_to_dict(report: ValidationReport) -> dict[str, Any]:
    return {
        "errors": [{"code": e.code, "path": e.path, "message": e.message}
                   for e in report.errors],
        "warnings": [{"code": w.code, "path": w.path, "message": w.message}
                     for w in report.warnings],
    }


def _is_absolute_uri(uri: str) -> bool:
    from urllib.parse import urlparse

    parsed = urlparse(uri)
    return bool(parsed.scheme) and bool(parsed.netloc or parsed.path)


def validate_tour(manifest: TourManifest) -> ValidationReport:
    """Check every model invariant and report all violations.

    Pure function of the manifest: defects become report entries with stable
    codes, never exceptions. Empty ``errors`` means the tour is servable.
    """
    errors: list[ReportEntry] = []
    warnings: list[ReportEntry] = []

    def err(code: str, path: str, message: str) -> None:
        errors.append(ReportEntry(code, path, message))

    def warn(code: str, path: str, message: str) -> None:
        warnings.append(ReportEntry(code, path, message))

    def check_lang(tag: str, path: str) -> None:
        if not _LANG_TAG_RE.match(tag or ""):
            err("BAD_LANGUAGE_TAG", path, f"not a well-formed language tag: {tag!r}")

    def check_localized(m: Mapping[str, str], path: str) -> None:
        for key in m:
            check_lang(key, f"{path}[{key}]")

    def check_direction(d: Direction, path: str) -> None:
        if not (math.isfinite(d.yaw) and math.isfinite(d.pitch)):
            err("NON_FINITE", path, f"direction has non-finite component ({d.yaw}, {d.pitch})")
            return
        if not 0.0 <= d.yaw < 360.0:
            err("YAW_RANGE", f"{path}.yaw", f"yaw {d.yaw} not normalized into [0, 360)")
        if not -90.0 <= d.pitch <= 90.0:
            err("PITCH_RANGE", f"{path}.pitch", f"pitch {d.pitch} outside [-90, +90]")

    if manifest.schema_version != SCHEMA_VERSION:
        err("BAD_SCHEMA_VERSION", "schema_version",
            f"expected {SCHEMA_VERSION}, got {manifest.schema_version}")
    if not manifest.tour_id:
        err("EMPTY_ID", "tour_id", "tour_id must be non-empty")
    check_lang(manifest.default_language, "default_language")
    check_localized(manifest.title, "title")

    env_ids: set[str] = set()
    for i, env in enumerate(manifest.environments):
        path = f"environments[{i}]"
        if not env.env_id:
            err("EMPTY_ID", f"{path}.env_id", "env_id must be non-empty")
        elif env.env_id in env_ids:
            err("DUPLICATE_ENV_ID", f"{path}.env_id", f"duplicate environment id {env.env_id!r}")
        else:
            env_ids.add(env.env_id)
        check_localized(env.name, f"{path}.name")
        check_direction(env.initial_view, f"{path}.initial_view")
        pano = env.panorama
        if pano.width <= 0 or pano.height <= 0:
            err("PANORAMA_DIMENSIONS", f"{path}.panorama",
                f"non-positive dimensions {pano.width}x{pano.height}")
        # scaled by height so the tolerance edge stays exact for integer sizes
        elif abs(pano.width - ASPECT_RATIO * pano.height) > ASPECT_TOLERANCE * pano.height:
            err("PANORAMA_ASPECT", f"{path}.panorama",
                f"{pano.width}x{pano.height} is not 2:1 within 1%")

    if not manifest.environments:
        err("NO_ENVIRONMENTS", "environments", "a tour needs at least one environment")
    else:
        entries = [e.env_id for e in manifest.environments if e.is_entry]
        if not entries:
            err("NO_ENTRY", "environments", "no environment is flagged as entry point")
        elif len(entries) > 1:
            err("MULTIPLE_ENTRY", "environments",
                f"{len(entries)} environments flagged as entry: {entries}")

    for i, env in enumerate(manifest.environments):
        for j, link in enumerate(env.nav_links):
            path = f"environments[{i}].nav_links[{j}]"
            check_direction(link.direction, path)
            if link.target not in env_ids:
                err("DANGLING_NAV_TARGET", path,
                    f"nav link targets unknown environment {link.target!r}")

    repo_ids: set[str] = set()
    for i, repo in enumerate(manifest.external_repos):
        path = f"external_repos[{i}]"
        if not repo.repo_id:
            err("EMPTY_ID", f"{path}.repo_id", "repo_id must be non-empty")
        elif repo.repo_id in repo_ids:
            err("DUPLICATE_REPO_ID", f"{path}.repo_id", f"duplicate repo id {repo.repo_id!r}")
        else:
            repo_ids.add(repo.repo_id)
        if not _is_absolute_uri(repo.base_uri) or "://" not in repo.base_uri:
            err("MALFORMED_URI", f"{path}.base_uri",
                f"base_uri must be absolute, got {repo.base_uri!r}")
        policy = repo.cache_policy
        if policy.mode not in CACHE_MODES:
            err("BAD_CACHE_POLICY", f"{path}.cache_policy.mode",
                f"unknown cache mode {policy.mode!r}")
        if policy.ttl < 0 or policy.max_object_bytes <= 0:
            err("BAD_CACHE_POLICY", f"{path}.cache_policy",
                f"ttl must be >= 0 and max_object_bytes > 0")

    content_ids: set[str] = set()
    kinds_by_id: dict[str, str] = {}
    for i, item in enumerate(manifest.content_catalog):
        path = f"content_catalog[{i}]"
        if not item.content_id:
            err("EMPTY_ID", f"{path}.content_id", "content_id must be non-empty")
        elif item.content_id in content_ids:
            err("DUPLICATE_CONTENT_ID", f"{path}.content_id",
                f"duplicate content id {item.content_id!r}")
        else:
            content_ids.add(item.content_id)
            kinds_by_id[item.content_id] = item.kind
        if item.kind not in CONTENT_KINDS:
            err("BAD_KIND", f"{path}.kind", f"unknown content kind {item.kind!r}")
        if item.language != "und":
            check_lang(item.language, f"{path}.language")
        src = item.source
        if isinstance(src, ExternalSource):
            if not src.repo_id or not src.uri:
                err("EXTERNAL_SOURCE_INCOMPLETE", f"{path}.source",
                    "external items need both repo_id and uri")
            elif src.repo_id not in repo_ids:
                err("DANGLING_REPO", f"{path}.source.repo_id",
                    f"unregistered repository {src.repo_id!r}")
        else:
            if not _HEX256_RE.match(src.payload.hash or ""):
                err("INTERNAL_MISSING_PAYLOAD", f"{path}.source.payload",
                    "internal items need a 64-char lowercase hex payload hash")

    # variants stand in for each other at serve time, so a group mixing kinds
    # could smuggle an incompatible presentation into a bundle
    group_kinds: dict[str, set[str]] = {}
    for item in manifest.content_catalog:
        if item.variant_group:
            group_kinds.setdefault(item.variant_group, set()).add(item.kind)
    for group in sorted(group_kinds):
        kinds = group_kinds[group]
        if len(kinds) > 1:
            err("VARIANT_GROUP_KIND", f"variant_group[{group}]",
                f"group {group!r} mixes kinds {sorted(kinds)}")

    asset_ids: set[str] = set()
    for i, asset in enumerate(manifest.assets):
        path = f"assets[{i}]"
        if not asset.asset_id:
            err("EMPTY_ID", f"{path}.asset_id", "asset_id must be non-empty")
        elif asset.asset_id in asset_ids:
            err("DUPLICATE_ASSET_ID", f"{path}.asset_id",
                f"duplicate asset id {asset.asset_id!r}")
        else:
            asset_ids.add(asset.asset_id)
        if asset.environment_id not in env_ids:
            err("DANGLING_ENVIRONMENT", f"{path}.environment_id",
                f"asset placed in unknown environment {asset.environment_id!r}")
        check_direction(asset.anchor, f"{path}.anchor")
        if asset.marker_style not in MARKER_STYLES:
            err("BAD_MARKER_STYLE", f"{path}.marker_style",
                f"unknown marker style {asset.marker_style!r}")
        check_localized(asset.label, f"{path}.label")
        if not asset.bindings:
            warn("DRAFT_ASSET", path,
                 f"asset {asset.asset_id!r} has no bindings and will be hidden when served")
        for j, binding in enumerate(asset.bindings):
            bpath = f"{path}.bindings[{j}]"
            if binding.content_id not in content_ids:
                err("DANGLING_CONTENT", bpath,
                    f"binding references unknown content {binding.content_id!r}")
            else:
                kind = kinds_by_id[binding.content_id]
                expected = KIND_PRESENTATION.get(kind)
                if expected is not None and binding.presentation != expected:
                    err("PRESENTATION_MISMATCH", bpath,
                        f"presentation {binding.presentation!r} incompatible with "
                        f"kind {kind!r} (expected {expected!r})")
            if binding.presentation not in PRESENTATIONS:
                err("BAD_PRESENTATION", bpath,
                    f"unknown presentation {binding.presentation!r}")

    # unused contents are legal but worth a heads-up; language variants of a
    # bound item count as used through their variant group
    bound = {b.content_id for a in manifest.assets for b in a.bindings}
    bound_groups = {
        c.variant_group
        for c in manifest.content_catalog
        if c.content_id in bound and c.variant_group
    }
    for i, item in enumerate(manifest.content_catalog):
        used = item.content_id in bound or (item.variant_group and item.variant_group in bound_groups)
        if not used:
            warn("UNUSED_CONTENT", f"content_catalog[{i}]",
                 f"content {item.content_id!r} is not bound by any asset")

    return ValidationReport(errors=tuple(errors), warnings=tuple(warnings))


# ---------------------------------------------------------------------------
# serialization


def _direction_to_dict(d: Direction) -> dict[str, float]:
    return {"yaw": d.yaw, "pitch": d.pitch}


def environment_to_dict(e: Environment) -> dict[str, Any]:
    return {
        "env_id": e.env_id,
        "name": dict(e.name),
        "panorama": {
            "locator": e.panorama.locator,
            "width": e.panorama.width,
            "height": e.panorama.height,
            "media_type": e.panorama.media_type,
        },
        "initial_view": _direction_to_dict(e.initial_view),
        "nav_links": [
            {"direction": _direction_to_dict(l.direction), "target": l.target}
            for l in e.nav_links
        ],
        "is_entry": e.is_entry,
    }


def asset_to_dict(a: Asset) -> dict[str, Any]:
    return {
        "asset_id": a.asset_id,
        "environment_id": a.environment_id,
        "anchor": _direction_to_dict(a.anchor),
        "marker_style": a.marker_style,
        "label": dict(a.label),
        "bindings": [
            {"content_id": b.content_id, "presentation": b.presentation}
            for b in a.bindings
        ],
    }


def repository_to_dict(r: ExternalRepository) -> dict[str, Any]:
    return {
        "repo_id": r.repo_id,
        "owner": r.owner,
        "base_uri": r.base_uri,
        "cache_policy": {
            "mode": r.cache_policy.mode,
            "ttl": r.cache_policy.ttl,
            "max_object_bytes": r.cache_policy.max_object_bytes,
        },
    }


def manifest_to_dict(manifest: TourManifest) -> dict[str, Any]:
    return {
        "schema_version": manifest.schema_version,
        "tour_id": manifest.tour_id,
        "title": dict(manifest.title),
        "default_language": manifest.default_language,
        "revision": manifest.revision,
        "environments": [environment_to_dict(e) for e in manifest.environments],
        "assets": [asset_to_dict(a) for a in manifest.assets],
        "content_catalog": [content_item_to_dict(c) for c in manifest.content_catalog],
        "external_repos": [repository_to_dict(r) for r in manifest.external_repos],
    }


def content_item_to_dict(item: ContentItem) -> dict[str, Any]:
    if isinstance(item.source, ExternalSource):
        source: dict[str, Any] = {
            "type": "external",
            "repo_id": item.source.repo_id,
            "uri": item.source.uri,
            "embed": item.source.embed,
        }
    else:
        source = {
            "type": "internal",
            "payload": {
                "hash": item.source.payload.hash,
                "size": item.source.payload.size,
                "media_type": item.source.payload.media_type,
            },
        }
    out: dict[str, Any] = {
        "content_id": item.content_id,
        "kind": item.kind,
        "language": item.language,
        "title": item.title,
        "credits": item.credits,
        "source": source,
    }
    if item.variant_group is not None:
        out["variant_group"] = item.variant_group
    if item.captions:
        out["captions"] = True
    return out


class _Parser:
    """Structural JSON-to-model parsing; semantic checks stay in validate_tour."""

    def fail(self, path: str, message: str) -> None:
        raise ManifestParseError(message, path=path)

    def obj(self, value: Any, path: str) -> dict:
        if not isinstance(value, dict):
            self.fail(path, f"expected object, got {type(value).__name__}")
        return value

    def arr(self, value: Any, path: str) -> list:
        if not isinstance(value, list):
            self.fail(path, f"expected array, got {type(value).__name__}")
        return value

    def string(self, value: Any, path: str) -> str:
        if not isinstance(value, str):
            self.fail(path, f"expected string, got {type(value).__name__}")
        return value

    def number(self, value: Any, path: str) -> float:
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(path, f"expected number, got {type(value).__name__}")
        return float(value)

    def integer(self, value: Any, path: str) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(path, f"expected integer, got {type(value).__name__}")
        return value

    def boolean(self, value: Any, path: str) -> bool:
        if not isinstance(value, bool):
            self.fail(path, f"expected boolean, got {type(value).__name__}")
        return value

    def str_map(self, value: Any, path: str) -> dict[str, str]:
        out = {}
        for k, v in self.obj(value, path).items():
            out[str(k)] = self.string(v, f"{path}[{k}]")
        return out

    def direction(self, value: Any, path: str) -> Direction:
        d = self.obj(value, path)
        return Direction(
            yaw=self.number(d.get("yaw", 0.0), f"{path}.yaw"),
            pitch=self.number(d.get("pitch", 0.0), f"{path}.pitch"),
        )

    def payload_ref(self, value: Any, path: str) -> PayloadRef:
        d = self.obj(value, path)
        return PayloadRef(
            hash=self.string(d.get("hash", ""), f"{path}.hash"),
            size=self.integer(d.get("size", 0), f"{path}.size"),
            media_type=self.string(d.get("media_type", "application/octet-stream"),
                                   f"{path}.media_type"),
        )

    def content_item(self, value: Any, path: str) -> ContentItem:
        d = self.obj(value, path)
        src_raw = self.obj(d.get("source", {}), f"{path}.source")
        src_type = src_raw.get("type")
        source: InternalSource | ExternalSource
        if src_type == "external":
            source = ExternalSource(
                repo_id=self.string(src_raw.get("repo_id", ""), f"{path}.source.repo_id"),
                uri=self.string(src_raw.get("uri", ""), f"{path}.source.uri"),
                embed=self.boolean(src_raw.get("embed", False), f"{path}.source.embed"),
            )
        elif src_type == "internal":
            source = InternalSource(payload=self.payload_ref(src_raw.get("payload", {}),
                                                             f"{path}.source.payload"))
        else:
            self.fail(f"{path}.source.type", f"source type must be internal or external, got {src_type!r}")
        variant = d.get("variant_group")
        return ContentItem(
            content_id=self.string(d.get("content_id", ""), f"{path}.content_id"),
            kind=self.string(d.get("kind", ""), f"{path}.kind"),
            language=self.string(d.get("language", "und"), f"{path}.language"),
            title=self.string(d.get("title", ""), f"{path}.title"),
            credits=self.string(d.get("credits", ""), f"{path}.credits"),
            source=source,
            variant_group=self.string(variant, f"{path}.variant_group") if variant is not None else None,
            captions=self.boolean(d.get("captions", False), f"{path}.captions"),
        )

    def environment(self, value: Any, path: str) -> Environment:
        d = self.obj(value, path)
        pano_raw = self.obj(d.get("panorama", {}), f"{path}.panorama")
        links = []
        for j, link_raw in enumerate(self.arr(d.get("nav_links", []), f"{path}.nav_links")):
            lp = f"{path}.nav_links[{j}]"
            ld = self.obj(link_raw, lp)
            links.append(NavLink(
                direction=self.direction(ld.get("direction", {}), f"{lp}.direction"),
                target=self.string(ld.get("target", ""), f"{lp}.target"),
            ))
        return Environment(
            env_id=self.string(d.get("env_id", ""), f"{path}.env_id"),
            name=self.str_map(d.get("name", {}), f"{path}.name"),
            panorama=PanoramaSource(
                locator=self.string(pano_raw.get("locator", ""), f"{path}.panorama.locator"),
                width=self.integer(pano_raw.get("width", 0), f"{path}.panorama.width"),
                height=self.integer(pano_raw.get("height", 0), f"{path}.panorama.height"),
                media_type=self.string(pano_raw.get("media_type", "image/jpeg"),
                                       f"{path}.panorama.media_type"),
            ),
            initial_view=self.direction(d.get("initial_view", {}), f"{path}.initial_view"),
            nav_links=tuple(links),
            is_entry=self.boolean(d.get("is_entry", False), f"{path}.is_entry"),
        )

    def asset(self, value: Any, path: str) -> Asset:
        d = self.obj(value, path)
        bindings = []
        for j, b_raw in enumerate(self.arr(d.get("bindings", []), f"{path}.bindings")):
            bp = f"{path}.bindings[{j}]"
            bd = self.obj(b_raw, bp)
            bindings.append(ContentBinding(
                content_id=self.string(bd.get("content_id", ""), f"{bp}.content_id"),
                presentation=self.string(bd.get("presentation", ""), f"{bp}.presentation"),
            ))
        return Asset(
            asset_id=self.string(d.get("asset_id", ""), f"{path}.asset_id"),
            environment_id=self.string(d.get("environment_id", ""), f"{path}.environment_id"),
            anchor=self.direction(d.get("anchor", {}), f"{path}.anchor"),
            marker_style=self.string(d.get("marker_style", "dot"), f"{path}.marker_style"),
            label=self.str_map(d.get("label", {}), f"{path}.label"),
            bindings=tuple(bindings),
        )

    def repository(self, value: Any, path: str) -> ExternalRepository:
        d = self.obj(value, path)
        pol_raw = self.obj(d.get("cache_policy", {}), f"{path}.cache_policy")
        return ExternalRepository(
            repo_id=self.string(d.get("repo_id", ""), f"{path}.repo_id"),
            owner=self.string(d.get("owner", ""), f"{path}.owner"),
            base_uri=self.string(d.get("base_uri", ""), f"{path}.base_uri"),
            cache_policy=CachePolicy(
                mode=self.string(pol_raw.get("mode", "prefer_cache"), f"{path}.cache_policy.mode"),
                ttl=self.number(pol_raw.get("ttl", 86400.0), f"{path}.cache_policy.ttl"),
                max_object_bytes=self.integer(pol_raw.get("max_object_bytes", 64 * 1024 * 1024),
                                              f"{path}.cache_policy.max_object_bytes"),
            ),
        )


def content_item_from_dict(data: Mapping[str, Any], path: str = "content") -> ContentItem:
    return _Parser().content_item(dict(data), path)


def environment_from_dict(data: Mapping[str, Any], path: str = "environment") -> Environment:
    return _Parser().environment(dict(data), path)


def asset_from_dict(data: Mapping[str, Any], path: str = "asset") -> Asset:
    return _Parser().asset(dict(data), path)


def repository_from_dict(data: Mapping[str, Any], path: str = "repository") -> ExternalRepository:
    return _Parser().repository(dict(data), path)


def manifest_from_dict(data: Mapping[str, Any]) -> TourManifest:
    """Parse a manifest document. Raises ManifestParseError on structural defects."""
    p = _Parser()
    root = p.obj(dict(data), "manifest")

    environments = []
    for i, raw in enumerate(p.arr(root.get("environments", []), "environments")):
        environments.append(p.environment(raw, f"environments[{i}]"))

    assets = []
    for i, raw in enumerate(p.arr(root.get("assets", []), "assets")):
        assets.append(p.asset(raw, f"assets[{i}]"))

    catalog = []
    for i, raw in enumerate(p.arr(root.get("content_catalog", []), "content_catalog")):
        catalog.append(p.content_item(raw, f"content_catalog[{i}]"))

    repos = []
    for i, raw in enumerate(p.arr(root.get("external_repos", []), "external_repos")):
        repos.append(p.repository(raw, f"external_repos[{i}]"))

    return TourManifest(
        tour_id=p.string(root.get("tour_id", ""), "tour_id"),
        title=p.str_map(root.get("title", {}), "title"),
        default_language=p.string(root.get("default_language", "und"), "default_language"),
        environments=tuple(environments),
        assets=tuple(assets),
        content_catalog=tuple(catalog),
        external_repos=tuple(repos),
        schema_version=p.integer(root.get("schema_version", 0), "schema_version"),
        revision=p.integer(root.get("revision", 0), "revision"),
    )


def manifest_to_json(manifest: TourManifest) -> str:
    return json.dumps(manifest_to_dict(manifest), ensure_ascii=False, indent=2) + "\n"


def manifest_from_json(text: str) -> TourManifest:
    try:
        data = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ManifestParseError(f"invalid JSON: {exc}", path="manifest")
    if not isinstance(data, dict):
        raise ManifestParseError("manifest root must be an object", path="manifest")
    return manifest_from_dict(data)


def load_tour_file(path: str | Path) -> TourManifest:
    return manifest_from_json(Path(path).read_text(encoding="utf-8"))


def save_tour_file(path: str | Path, manifest: TourManifest) -> None:
    Path(path).write_text(manifest_to_json(manifest), encoding="utf-8")


def with_revision(manifest: TourManifest, revision: int) -> TourManifest:
    return replace(manifest, revision=revision)


def iter_bound_content_ids(manifest: TourManifest) -> Iterable[tuple[str, str]]:
    """Yield (asset_id, content_id) for every binding in the manifest."""
    for asset in manifest.assets:
        for binding in asset.bindings:
            yield asset.asset_id, binding.content_id
