"""One museum's on-disk world: tours, content store, external cache, event
log, and the audit trail, all under a single root directory.

Layout:
    <root>/catalog.v1         typed content catalog (store)
    <root>/blobs/..           content-addressed payloads (store)
    <root>/extcache.v1        external fetch cache index
    <root>/tours/<id>.json    one manifest per tour
    <root>/events/<day>.jsonl interaction events
    <root>/audit.log          admin audit trail, one JSON line per action

Admin edits are expressed as plain data (`{"op": ..., ...}`) and applied by
a pure function, so any edit sequence can be replayed onto a manifest and
must land on the same result the live workspace reached.
"""

from __future__ import annotations

import json
import threading
import time
from dataclasses import replace
from pathlib import Path
from typing import Any, Iterable, Mapping

from .analytics import EventLog, StatsReport, aggregate_stats, sessionize
from .errors import (
    EmptyPayloadError,
    InvalidManifestError,
    ManifestParseError,
    NotFoundError,
    RevisionConflictError,
    StillReferencedError,
)
from .federation import ExternalCache
from .model import (
    ContentItem,
    InternalSource,
    TourManifest,
    asset_from_dict,
    content_item_from_dict,
    environment_from_dict,
    manifest_from_json,
    manifest_to_json,
    repository_from_dict,
    validate_tour,
    with_revision,
)
from .store import ContentStore, write_atomic

EDIT_OPS = ("upsert_environment", "upsert_asset", "map_binding",
            "put_content", "remove")
REMOVE_TARGETS = ("environment", "asset", "binding", "content", "repository")

_PANO_PREFIX = "blob:sha256:"


def _upsert(items: tuple, key, new) -> tuple:
    """Replace the element with the same key in place, else append."""
    out = list(items)
    for i, existing in enumerate(out):
        if key(existing) == key(new):
            out[i] = new
            return tuple(out)
    out.append(new)
    return tuple(out)


def apply_edit(manifest: TourManifest, edit: Mapping[str, Any]) -> TourManifest:
    """Apply one admin edit; returns the manifest at revision + 1.

    Pure: no store or filesystem access, so folding a recorded edit list
    over the initial manifest reproduces the final one exactly. Semantic
    validity is the caller's job (validate_tour on the result); this layer
    only raises for structurally broken edits, unknown targets, and removal
    of still-bound content.
    """
    op = edit.get("op")
    if op == "upsert_environment":
        env = environment_from_dict(edit.get("environment", {}), "edit.environment")
        updated = replace(manifest, environments=_upsert(
            manifest.environments, lambda e: e.env_id, env))
    elif op == "upsert_asset":
        asset = asset_from_dict(edit.get("asset", {}), "edit.asset")
        updated = replace(manifest, assets=_upsert(
            manifest.assets, lambda a: a.asset_id, asset))
    elif op == "map_binding":
        updated = _apply_map_binding(manifest, edit)
    elif op == "put_content":
        updated = _apply_put_content(manifest, edit)
    elif op == "remove":
        updated = _apply_remove(manifest, edit)
    else:
        raise ManifestParseError(f"unknown edit op {op!r}", path="edit.op")
    return with_revision(updated, manifest.revision + 1)


def _apply_map_binding(manifest: TourManifest, edit: Mapping[str, Any]) -> TourManifest:
    from .model import ContentBinding  # local to keep header tight

    asset_id = edit.get("asset_id")
    content_id = edit.get("content_id")
    presentation = edit.get("presentation")
    if not isinstance(asset_id, str) or not isinstance(content_id, str) \
            or not isinstance(presentation, str):
        raise ManifestParseError("map_binding needs asset_id, content_id, "
                                 "presentation", path="edit")
    target = manifest.asset(asset_id)
    if target is None:
        raise NotFoundError(f"asset {asset_id!r} not in tour", path="edit.asset_id")
    binding = ContentBinding(content_id=content_id, presentation=presentation)
    new_asset = replace(target, bindings=_upsert(
        target.bindings, lambda b: b.content_id, binding))
    return replace(manifest, assets=_upsert(manifest.assets,
                                            lambda a: a.asset_id, new_asset))


def _apply_put_content(manifest: TourManifest, edit: Mapping[str, Any]) -> TourManifest:
    item = content_item_from_dict(edit.get("item", {}), "edit.item")
    updated = manifest
    if "repo" in edit:  # external items may register their repo in one step
        repo = repository_from_dict(edit["repo"], "edit.repo")
        updated = replace(updated, external_repos=_upsert(
            updated.external_repos, lambda r: r.repo_id, repo))
    return replace(updated, content_catalog=_upsert(
        updated.content_catalog, lambda c: c.content_id, item))


def _apply_remove(manifest: TourManifest, edit: Mapping[str, Any]) -> TourManifest:
    target = edit.get("target")
    obj_id = edit.get("id")
    if target not in REMOVE_TARGETS or not isinstance(obj_id, str):
        raise ManifestParseError(f"remove needs target in {REMOVE_TARGETS} "
                                 "and an id", path="edit")
    if target == "environment":
        if manifest.environment(obj_id) is None:
            raise NotFoundError(f"environment {obj_id!r} not in tour",
                                path="edit.id")
        return replace(manifest, environments=tuple(
            e for e in manifest.environments if e.env_id != obj_id))
    if target == "asset":
        if manifest.asset(obj_id) is None:
            raise NotFoundError(f"asset {obj_id!r} not in tour", path="edit.id")
        return replace(manifest, assets=tuple(
            a for a in manifest.assets if a.asset_id != obj_id))
    if target == "binding":
        asset_id = edit.get("asset_id")
        asset = manifest.asset(asset_id) if isinstance(asset_id, str) else None
        if asset is None:
            raise NotFoundError(f"asset {asset_id!r} not in tour",
                                path="edit.asset_id")
        if all(b.content_id != obj_id for b in asset.bindings):
            raise NotFoundError(f"no binding of {obj_id!r} on {asset_id!r}",
                                path="edit.id")
        new_asset = replace(asset, bindings=tuple(
            b for b in asset.bindings if b.content_id != obj_id))
        return replace(manifest, assets=_upsert(
            manifest.assets, lambda a: a.asset_id, new_asset))
    if target == "content":
        if manifest.content(obj_id) is None:
            raise NotFoundError(f"content {obj_id!r} not in tour",
                                path="edit.id")
        holders = sorted(asset_id for asset_id, content_id
                         in _iter_bindings(manifest) if content_id == obj_id)
        if holders:
            raise StillReferencedError(
                f"content {obj_id!r} is bound to {', '.join(holders)}",
                asset_ids=holders, content_id=obj_id)
        return replace(manifest, content_catalog=tuple(
            c for c in manifest.content_catalog if c.content_id != obj_id))
    # repository
    if manifest.repo(obj_id) is None:
        raise NotFoundError(f"repository {obj_id!r} not in tour",
                            path="edit.id")
    return replace(manifest, external_repos=tuple(
        r for r in manifest.external_repos if r.repo_id != obj_id))


def _iter_bindings(manifest: TourManifest) -> Iterable[tuple[str, str]]:
    for asset in manifest.assets:
        for binding in asset.bindings:
            yield asset.asset_id, binding.content_id


def _default_now_ms() -> int:
    return time.time_ns() // 1_000_000


class Workspace:
    """Facade over one root directory; everything the gateway and CLI touch."""

    def __init__(self, root: str | Path, *, now_ms=None) -> None:
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self.now_ms = now_ms or _default_now_ms
        self.store = ContentStore(self.root)
        self.cache = ExternalCache(self.root, self.store)
        self.events = EventLog(self.root / "events", now_ms=self.now_ms)
        (self.root / "tours").mkdir(exist_ok=True)
        self.audit_path = self.root / "audit.log"
        self._edit_lock = threading.Lock()
        self._audit_lock = threading.Lock()

    # -- tours ------------------------------------------------------------

    def tour_path(self, tour_id: str) -> Path:
        if not tour_id or "/" in tour_id or "\\" in tour_id or tour_id in (".", ".."):
            raise NotFoundError(f"no such tour {tour_id!r}")
        return self.root / "tours" / f"{tour_id}.json"

    def list_tours(self) -> list[str]:
        return sorted(p.stem for p in (self.root / "tours").glob("*.json"))

    def load_tour(self, tour_id: str) -> TourManifest:
        path = self.tour_path(tour_id)
        if not path.exists():
            raise NotFoundError(f"no such tour {tour_id!r}")
        return manifest_from_json(path.read_text(encoding="utf-8"))

    def save_tour(self, manifest: TourManifest, *, validate: bool = True):
        report = validate_tour(manifest)
        if validate and not report.ok:
            raise InvalidManifestError(
                f"tour {manifest.tour_id!r} failed validation "
                f"({len(report.errors)} errors)", report=report)
        write_atomic(self.tour_path(manifest.tour_id),
                     manifest_to_json(manifest).encode("utf-8"))
        return report

    # -- admin edits --------------------------------------------------------

    def admin_edit(self, tour_id: str, edit: Mapping[str, Any], *,
                   expected_revision: int | None = None,
                   payload: bytes | None = None,
                   actor: str = "local") -> int:
        """Apply, validate, persist, and audit one edit; returns the new
        revision. Either everything lands or the manifest is untouched."""
        with self._edit_lock:
            manifest = self.load_tour(tour_id)
            if expected_revision is not None and expected_revision != manifest.revision:
                raise RevisionConflictError(
                    f"manifest is at revision {manifest.revision}, "
                    f"edit expected {expected_revision}",
                    expected=expected_revision, actual=manifest.revision)
            updated = apply_edit(manifest, edit)
            report = validate_tour(updated)
            if not report.ok:
                raise InvalidManifestError(
                    f"edit would leave tour invalid ({len(report.errors)} errors)",
                    report=report)
            self._store_side_effects(edit, payload)
            self.save_tour(updated, validate=False)
            self.audit(actor, str(edit.get("op")), tour=tour_id,
                       revision=updated.revision,
                       subject=_edit_subject(edit))
            return updated.revision

    def _store_side_effects(self, edit: Mapping[str, Any],
                            payload: bytes | None) -> None:
        op = edit.get("op")
        if op == "upsert_environment" and payload is not None:
            # panorama bytes ride along with the edit; the locator must
            # already name their digest so replays stay pure
            env = environment_from_dict(edit.get("environment", {}),
                                        "edit.environment")
            ref = self.store.put_blob(payload, env.panorama.media_type)
            if env.panorama.locator != _PANO_PREFIX + ref.hash:
                raise ManifestParseError(
                    "panorama payload does not match the locator digest",
                    path="edit.environment.panorama.locator")
        elif op == "put_content":
            item = content_item_from_dict(edit.get("item", {}), "edit.item")
            if isinstance(item.source, InternalSource):
                if payload is None:
                    # metadata-only update: the bytes must already be here
                    ref = item.source.payload
                    if not self.store.has_blob(ref.hash):
                        raise EmptyPayloadError(
                            f"internal content {item.content_id!r} needs "
                            "payload bytes", path="edit.item")
                    payload = self.store.get_blob(ref.hash)
                self.store.put_content(item, payload, replace_existing=True)
            else:
                self.store.put_content(item, None, replace_existing=True)
        elif op == "remove" and edit.get("target") == "content":
            try:
                self.store.remove_item(str(edit.get("id")),
                                       keep_hashes=self.protected_hashes())
            except NotFoundError:
                pass  # manifest-only item; nothing stored to drop

    # -- audit trail --------------------------------------------------------

    def audit(self, actor: str, action: str, **details: Any) -> None:
        line = json.dumps({"ts": self.now_ms(), "actor": actor,
                           "action": action, **details},
                          ensure_ascii=False, sort_keys=True)
        with self._audit_lock:
            with open(self.audit_path, "a", encoding="utf-8") as fh:
                fh.write(line + "\n")
                fh.flush()

    def audit_lines(self) -> list[dict[str, Any]]:
        if not self.audit_path.exists():
            return []
        return [json.loads(line) for line
                in self.audit_path.read_text(encoding="utf-8").splitlines()
                if line.strip()]

    # -- content & garbage collection ---------------------------------------

    def protected_hashes(self) -> set[str]:
        """Blob hashes that are not content payloads but must survive GC:
        panorama images and cached external fetches."""
        protected = self.cache.referenced_hashes()
        for tour_id in self.list_tours():
            for env in self.load_tour(tour_id).environments:
                locator = env.panorama.locator
                if locator.startswith(_PANO_PREFIX):
                    protected.add(locator[len(_PANO_PREFIX):])
        return protected

    def gc(self) -> list[str]:
        referenced = self.store.catalog_hashes() | self.protected_hashes()
        return self.store.sweep(referenced=referenced)

    def media_type_for(self, blob_hash: str) -> str:
        for item in self.store.list_contents(source="internal"):
            assert isinstance(item.source, InternalSource)
            if item.source.payload.hash == blob_hash:
                return item.source.payload.media_type
        for entry in self.cache.entries().values():
            if entry.hash == blob_hash:
                return entry.media_type
        for tour_id in self.list_tours():
            for env in self.load_tour(tour_id).environments:
                if env.panorama.locator == _PANO_PREFIX + blob_hash:
                    return env.panorama.media_type
        return "application/octet-stream"

    # -- analytics ------------------------------------------------------------

    def content_kinds(self) -> dict[str, str]:
        kinds: dict[str, str] = {}
        for tour_id in self.list_tours():
            for item in self.load_tour(tour_id).content_catalog:
                kinds[item.content_id] = item.kind
        for item in self.store.list_contents():
            kinds.setdefault(item.content_id, item.kind)
        return kinds

    def stats(self, grouping: str, window: tuple[int, int] | None = None,
              gap_timeout_s: float = 1800.0) -> StatsReport:
        events = self.events.read_all()
        if window is None:
            window = (0, self.now_ms())
        sessions = sessionize(events, gap_timeout_s)
        return aggregate_stats(sessions, grouping, window, self.content_kinds())


def _edit_subject(edit: Mapping[str, Any]) -> str:
    op = edit.get("op")
    if op == "upsert_environment":
        return str(edit.get("environment", {}).get("env_id", ""))
    if op == "upsert_asset":
        return str(edit.get("asset", {}).get("asset_id", ""))
    if op == "map_binding":
        return f"{edit.get('asset_id')}->{edit.get('content_id')}"
    if op == "put_content":
        return str(edit.get("item", {}).get("content_id", ""))
    if op == "remove":
        return f"{edit.get('target')}:{edit.get('id')}"
    return ""
