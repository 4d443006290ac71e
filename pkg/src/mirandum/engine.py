"""Interpretation engine: turns a manifest plus a visitor's context into
client-ready display directives and whole-tour bundles.

The rule pipeline per binding is fixed and documented:

    1. language  - pick the variant the visitor can read (5-step cascade)
    2. capability - drop kinds the client cannot present
    3. accessibility - drop caption-less videos when captions are required
    4. reachability - externals follow the federation decision table
    5. rank      - surviving directives get contiguous 0-based ranks

Everything here is pure: the cache is consulted through a read-only view
passed in by the caller, and reachability comes from a probe snapshot, so
identical inputs always compile to byte-identical bundles.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, replace
from typing import Any, Callable, Iterable, Sequence
from urllib.parse import quote

from .errors import InvalidManifestError
from .federation import (
    CACHE_COLD,
    DECISION_CACHED,
    DECISION_FRESH,
    CacheEntry,
    RepoSnapshot,
    join_uri,
    plan_fetch,
)
from .model import (
    Asset,
    ContentItem,
    Direction,
    ExternalSource,
    InternalSource,
    TourManifest,
    validate_tour,
)

BUNDLE_VERSION = 1

CAPABILITIES = ("video", "audio", "model_3d", "game")
ACCESSIBILITY_FLAGS = ("captions_required", "audio_description")

# kind -> capability a client must declare to receive it; text and image are free
REQUIRED_CAPABILITY = {
    "text": None,
    "image": None,
    "audio": "audio",
    "video": "video",
    "object3d": "model_3d",
    "game": "game",
}

# (cache_state, CacheEntry-or-None) for one external object; engines never
# touch the cache itself so compilation stays pure
CacheView = Callable[[str, str, float], "tuple[str, CacheEntry | None]"]


def cold_cache_view(repo_id: str, uri: str, ttl_s: float) -> tuple[str, CacheEntry | None]:
    return CACHE_COLD, None


@dataclass(frozen=True)
class VisitorContext:
    """Who is asking: language preferences, client capabilities, access needs."""

    session_id: str
    languages: tuple[str, ...] = ()
    capabilities: frozenset = frozenset(CAPABILITIES)
    accessibility: frozenset = frozenset()

    def normalized(self, default_language: str) -> VisitorContext:
        if self.languages:
            return self
        return replace(self, languages=(default_language,))


@dataclass(frozen=True)
class DisplayDirective:
    """One resolved instruction: show this content, this way, from here."""

    asset_id: str
    content_id: str
    presentation: str
    payload_locator: str
    locator_kind: str  # internal | embed | cached | proxy
    language: str
    rank: int
    media_type: str | None = None
    title: str = ""
    credits: str = ""
    captions: bool = False


def _primary(tag: str) -> str:
    return tag.split("-")[0].lower()


def match_language(variants: Sequence[ContentItem], prefs: Sequence[str],
                   default: str) -> ContentItem:
    """Pick the variant a visitor should get. Five steps, first hit wins:
    exact preference, primary-subtag preference (pt-BR matches pt), tour
    default, "und", then first by content_id. Ties inside a step go to the
    lowest content_id, which makes the pick independent of catalog order.
    """
    if not variants:
        raise ValueError("match_language needs at least one variant")
    ordered = sorted(variants, key=lambda v: v.content_id)
    for pref in prefs:
        for v in ordered:
            if v.language.lower() == pref.lower():
                return v
    for pref in prefs:
        want = _primary(pref)
        for v in ordered:
            if _primary(v.language) == want:
                return v
    for v in ordered:
        if v.language.lower() == default.lower():
            return v
    for v in ordered:
        if v.language == "und":
            return v
    return ordered[0]


def _variants_of(item: ContentItem, manifest: TourManifest) -> list[ContentItem]:
    if not item.variant_group:
        return [item]
    return [c for c in manifest.content_catalog if c.variant_group == item.variant_group]


def _locate(item: ContentItem, manifest: TourManifest, snapshot: RepoSnapshot,
            cache_view: CacheView) -> tuple[str, str, str | None] | None:
    """(locator, locator_kind, media_type) for an item, or None to drop it."""
    if isinstance(item.source, InternalSource):
        ref = item.source.payload
        return f"/media/{ref.hash}", "internal", ref.media_type

    src = item.source
    repo = manifest.repo(src.repo_id)
    if repo is None:
        return None
    policy = repo.cache_policy
    state, entry = cache_view(src.repo_id, src.uri, policy.ttl)
    decision, _ = plan_fetch(policy.mode, snapshot.reachable(src.repo_id), state)
    if decision == DECISION_CACHED and entry is not None:
        return f"/media/{entry.hash}", "cached", entry.media_type
    if decision == DECISION_FRESH:
        if src.embed:
            return join_uri(repo.base_uri, src.uri), "embed", None
        # not yet cached: hand the client a gateway path that fetches on demand
        return f"/external/{src.repo_id}?uri={quote(src.uri, safe='')}", "proxy", None
    return None


def resolve_asset(asset: Asset, manifest: TourManifest, ctx: VisitorContext,
                  snapshot: RepoSnapshot,
                  cache_view: CacheView = cold_cache_view) -> list[DisplayDirective]:
    """Run the rule pipeline over one asset's bindings, in priority order.

    An empty result is legal and means the asset is hidden for this visitor.
    """
    ctx = ctx.normalized(manifest.default_language)
    out: list[DisplayDirective] = []
    for binding in asset.bindings:
        item = manifest.content(binding.content_id)
        if item is None:
            continue
        chosen = match_language(_variants_of(item, manifest), ctx.languages,
                                manifest.default_language)
        needed = REQUIRED_CAPABILITY.get(chosen.kind)
        if needed is not None and needed not in ctx.capabilities:
            continue
        if ("captions_required" in ctx.accessibility
                and chosen.kind == "video" and not chosen.captions):
            continue
        located = _locate(chosen, manifest, snapshot, cache_view)
        if located is None:
            continue
        locator, locator_kind, media_type = located
        out.append(DisplayDirective(
            asset_id=asset.asset_id,
            content_id=chosen.content_id,
            presentation=binding.presentation,
            payload_locator=locator,
            locator_kind=locator_kind,
            language=chosen.language,
            rank=len(out),
            media_type=media_type,
            title=chosen.title,
            credits=chosen.credits,
            captions=chosen.captions,
        ))
    return out


# ---------------------------------------------------------------------------
# bundles


def _direction_dict(d: Direction) -> dict[str, float]:
    return {"yaw": d.yaw, "pitch": d.pitch}


def _panorama_locator(locator: str) -> str:
    if locator.startswith("blob:sha256:"):
        return "/media/" + locator[len("blob:sha256:"):]
    return locator


def _directive_dict(d: DisplayDirective) -> dict[str, Any]:
    return {
        "asset_id": d.asset_id,
        "content_id": d.content_id,
        "presentation": d.presentation,
        "payload_locator": d.payload_locator,
        "locator_kind": d.locator_kind,
        "language": d.language,
        "rank": d.rank,
        "media_type": d.media_type,
        "title": d.title,
        "credits": d.credits,
        "captions": d.captions,
    }


def compile_tour_bundle(manifest: TourManifest, ctx: VisitorContext,
                        snapshot: RepoSnapshot,
                        cache_view: CacheView = cold_cache_view) -> dict[str, Any]:
    """Compile the whole tour for one visitor.

    Raises InvalidManifestError (carrying the report) when the manifest does
    not validate. Assets that resolve to nothing are omitted; environments
    always appear so navigation keeps working.
    """
    report = validate_tour(manifest)
    if not report.ok:
        raise InvalidManifestError(
            f"tour {manifest.tour_id!r} has {len(report.errors)} validation errors",
            report=report)
    ctx = ctx.normalized(manifest.default_language)

    assets_by_env: dict[str, list[dict[str, Any]]] = {e.env_id: [] for e in manifest.environments}
    for asset in manifest.assets:
        directives = resolve_asset(asset, manifest, ctx, snapshot, cache_view)
        if not directives:
            continue
        assets_by_env[asset.environment_id].append({
            "asset_id": asset.asset_id,
            "anchor": _direction_dict(asset.anchor),
            "marker_style": asset.marker_style,
            "label": dict(asset.label),
            "directives": [_directive_dict(d) for d in directives],
        })

    entry = manifest.entry_environment()
    return {
        "bundle_version": BUNDLE_VERSION,
        "tour_id": manifest.tour_id,
        "title": dict(manifest.title),
        "default_language": manifest.default_language,
        "entry_env_id": entry.env_id if entry else "",
        "environments": [
            {
                "env_id": env.env_id,
                "name": dict(env.name),
                "panorama": {
                    "locator": _panorama_locator(env.panorama.locator),
                    "width": env.panorama.width,
                    "height": env.panorama.height,
                    "media_type": env.panorama.media_type,
                },
                "initial_view": _direction_dict(env.initial_view),
                "nav_links": [
                    {"direction": _direction_dict(l.direction), "target": l.target}
                    for l in env.nav_links
                ],
                "is_entry": env.is_entry,
                "assets": assets_by_env[env.env_id],
            }
            for env in manifest.environments
        ],
    }


def bundle_to_json(bundle: dict[str, Any]) -> str:
    """Canonical serialization: key-sorted, fixed separators, no whitespace
    variance, so equal bundles are equal bytes."""
    return json.dumps(bundle, ensure_ascii=False, sort_keys=True,
                      separators=(",", ":")) + "\n"


def iter_bundle_assets(bundle: dict[str, Any]) -> Iterable[dict[str, Any]]:
    for env in bundle["environments"]:
        for asset in env["assets"]:
            yield asset


def bundle_directive_pairs(bundle: dict[str, Any]) -> list[tuple[str, str]]:
    """(asset_id, content_id) for every directive, for oracle comparisons."""
    return [
        (asset["asset_id"], d["content_id"])
        for asset in iter_bundle_assets(bundle)
        for d in asset["directives"]
    ]
