"""Content-addressed payload store plus the museum's content catalog.

Blobs live at ``<root>/blobs/<first-two-hex>/<sha256>`` and a JSON catalog at
``<root>/catalog.v1`` holds one ContentItem per content_id; internal items
point into the blob space through their payload hash. Payloads deduplicate
by digest, so two catalog items may share one blob, and blobs with no
catalog item (panoramas, cached external objects) are also at home here.

Writes follow write-temp, fsync, rename so a crash at any point leaves
either the old state or the new state on disk, never a half-written blob
that reads can see. The catalog is only updated after the blob rename
lands, so every internal catalog item points at a complete blob; the
reverse (blob without item, from a crash in the gap) is swept by garbage
collection.

``fault_hook`` exists for crash testing: it is called with a stage name at
each point between the atomic steps, and any exception it raises aborts the
write mid-flight exactly as a power cut would.
"""

from __future__ import annotations

import hashlib
import json
import os
import threading
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Callable, Iterable

from .errors import (
    CorruptBlobError,
    DuplicateContentIdError,
    EmptyPayloadError,
    IoFailureError,
    NotFoundError,
)
from .model import (
    ContentItem,
    ExternalSource,
    InternalSource,
    PayloadRef,
    content_item_from_dict,
    content_item_to_dict,
)

CATALOG_NAME = "catalog.v1"

# fault_hook stage names, in write order
STAGE_BLOB_WRITTEN = "blob_written"
STAGE_BLOB_RENAMED = "blob_renamed"
STAGE_CATALOG_WRITTEN = "catalog_written"
STAGE_CATALOG_RENAMED = "catalog_renamed"


@dataclass(frozen=True)
class StoreStats:
    item_count: int
    blob_count: int
    total_bytes: int


def _fsync_file(path: Path) -> None:
    fd = os.open(path, os.O_RDONLY)
    try:
        os.fsync(fd)
    finally:
        os.close(fd)


def write_atomic(path: Path, data: bytes) -> None:
    """Write data to path via temp file, fsync and rename."""
    tmp = path.with_name(f".{path.name}.{os.getpid()}.tmp")
    tmp.write_bytes(data)
    _fsync_file(tmp)
    os.replace(tmp, path)


class ContentStore:
    """Catalog of ContentItems over an idempotent blob space keyed by sha256."""

    def __init__(self, root: str | Path,
                 fault_hook: Callable[[str], None] | None = None) -> None:
        self.root = Path(root)
        self.blob_root = self.root / "blobs"
        self.catalog_path = self.root / CATALOG_NAME
        self.fault_hook = fault_hook
        self._lock = threading.Lock()
        self.blob_root.mkdir(parents=True, exist_ok=True)
        self._items: dict[str, ContentItem] = self._load_catalog()

    # -- catalog ----------------------------------------------------------

    def _load_catalog(self) -> dict[str, ContentItem]:
        if not self.catalog_path.exists():
            return {}
        try:
            raw = json.loads(self.catalog_path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise IoFailureError(f"catalog unreadable: {exc}", path=str(self.catalog_path))
        return {
            cid: content_item_from_dict(item, path=f"catalog[{cid}]")
            for cid, item in raw.get("items", {}).items()
        }

    def _save_catalog(self) -> None:
        doc = {
            "version": 1,
            "items": {
                cid: content_item_to_dict(item)
                for cid, item in sorted(self._items.items())
            },
        }
        data = (json.dumps(doc, ensure_ascii=False, indent=2, sort_keys=True) + "\n").encode("utf-8")
        tmp = self.catalog_path.with_name(f".{CATALOG_NAME}.{os.getpid()}.tmp")
        tmp.write_bytes(data)
        _fsync_file(tmp)
        self._stage(STAGE_CATALOG_WRITTEN)
        os.replace(tmp, self.catalog_path)
        self._stage(STAGE_CATALOG_RENAMED)

    def _stage(self, name: str) -> None:
        if self.fault_hook is not None:
            self.fault_hook(name)

    # -- blob space -------------------------------------------------------

    def blob_path(self, hash: str) -> Path:
        return self.blob_root / hash[:2] / hash

    def put_blob(self, data: bytes, media_type: str = "application/octet-stream") -> PayloadRef:
        """Store raw bytes with no catalog item (panoramas, external cache)."""
        if not data:
            raise EmptyPayloadError("refusing to store an empty payload")
        digest = hashlib.sha256(data).hexdigest()
        with self._lock:
            self._write_blob(digest, data)
        return PayloadRef(hash=digest, size=len(data), media_type=media_type)

    def _write_blob(self, digest: str, data: bytes) -> None:
        path = self.blob_path(digest)
        path.parent.mkdir(parents=True, exist_ok=True)
        if not path.exists():
            tmp = path.with_name(f".{digest}.{os.getpid()}.tmp")
            tmp.write_bytes(data)
            _fsync_file(tmp)
            self._stage(STAGE_BLOB_WRITTEN)
            os.replace(tmp, path)
        self._stage(STAGE_BLOB_RENAMED)

    def get_blob(self, hash: str) -> bytes:
        """Read raw bytes back, verifying the digest on the way out."""
        path = self.blob_path(hash)
        if not path.exists():
            raise NotFoundError(f"no blob {hash}", path=str(path))
        data = path.read_bytes()
        if hashlib.sha256(data).hexdigest() != hash:
            raise CorruptBlobError(f"blob {hash} failed digest check", path=str(path))
        return data

    def has_blob(self, hash: str) -> bool:
        return self.blob_path(hash).exists()

    # -- content items ----------------------------------------------------

    def put_content(self, item: ContentItem, payload: bytes | None = None,
                    *, replace_existing: bool = False) -> ContentItem:
        """Add a content item; internal items must bring their payload bytes.

        The stored item's payload ref is always recomputed from the bytes
        (media type kept from the item's source if it declares one). Re-puts
        of an existing content_id are refused unless replace_existing is set.
        """
        with self._lock:
            if item.content_id in self._items and not replace_existing:
                raise DuplicateContentIdError(
                    f"content {item.content_id!r} already cataloged")
            if payload is not None:
                if not payload:
                    raise EmptyPayloadError(
                        f"content {item.content_id!r} has an empty payload")
                media_type = "application/octet-stream"
                if isinstance(item.source, InternalSource) and item.source.payload.media_type:
                    media_type = item.source.payload.media_type
                digest = hashlib.sha256(payload).hexdigest()
                stored = replace(item, source=InternalSource(payload=PayloadRef(
                    hash=digest, size=len(payload), media_type=media_type)))
                self._write_blob(digest, payload)
            else:
                if not isinstance(item.source, ExternalSource):
                    raise EmptyPayloadError(
                        f"internal content {item.content_id!r} needs payload bytes")
                stored = item
            previous = self._items.get(item.content_id)
            self._items[item.content_id] = stored
            try:
                self._save_catalog()
            except BaseException:
                # keep memory honest with disk if the catalog write died
                if previous is None:
                    self._items.pop(item.content_id, None)
                else:
                    self._items[item.content_id] = previous
                raise
            return stored

    def get_content(self, content_id: str) -> tuple[ContentItem, bytes | None]:
        """Item plus payload bytes (digest-verified); None payload for externals."""
        item = self._items.get(content_id)
        if item is None:
            raise NotFoundError(f"no content {content_id!r}")
        if isinstance(item.source, ExternalSource):
            return item, None
        return item, self.get_blob(item.source.payload.hash)

    def content_info(self, content_id: str) -> ContentItem | None:
        return self._items.get(content_id)

    def list_contents(self, kind: str | None = None, language: str | None = None,
                      source: str | None = None) -> list[ContentItem]:
        """Catalog scan, filters conjunctive, ordered by content_id."""
        out = []
        for cid in sorted(self._items):
            item = self._items[cid]
            if kind is not None and item.kind != kind:
                continue
            if language is not None and item.language != language:
                continue
            if source is not None:
                actual = "external" if isinstance(item.source, ExternalSource) else "internal"
                if actual != source:
                    continue
            out.append(item)
        return out

    def remove_item(self, content_id: str, keep_hashes: Iterable[str] = ()) -> None:
        """Drop a catalog item; its blob goes too once nothing else needs it.

        Reference checking against tour manifests is the caller's job;
        keep_hashes names blobs that must survive regardless (panoramas,
        cache entries).
        """
        with self._lock:
            item = self._items.pop(content_id, None)
            if item is None:
                raise NotFoundError(f"no content {content_id!r}")
            self._save_catalog()
            if isinstance(item.source, InternalSource):
                digest = item.source.payload.hash
                still_used = any(
                    isinstance(other.source, InternalSource)
                    and other.source.payload.hash == digest
                    for other in self._items.values()
                )
                if not still_used and digest not in set(keep_hashes):
                    path = self.blob_path(digest)
                    if path.exists():
                        path.unlink()

    def catalog_hashes(self) -> set[str]:
        return {
            item.source.payload.hash
            for item in self._items.values()
            if isinstance(item.source, InternalSource)
        }

    # -- maintenance ------------------------------------------------------

    def iter_blob_files(self) -> Iterable[Path]:
        for sub in sorted(self.blob_root.iterdir()) if self.blob_root.exists() else []:
            if not sub.is_dir():
                continue
            for f in sorted(sub.iterdir()):
                if not f.name.startswith("."):
                    yield f

    def orphans(self, referenced: Iterable[str] = ()) -> list[str]:
        """Blob files neither cataloged nor in the referenced set."""
        keep = self.catalog_hashes() | set(referenced)
        return [f.name for f in self.iter_blob_files() if f.name not in keep]

    def sweep(self, referenced: Iterable[str] = ()) -> list[str]:
        """Unlink orphan blobs; returns the hashes removed."""
        removed = []
        with self._lock:
            keep = self.catalog_hashes() | set(referenced)
            for f in list(self.iter_blob_files()):
                if f.name not in keep:
                    f.unlink()
                    removed.append(f.name)
        return removed

    def verify(self) -> list[str]:
        """Hashes of cataloged payloads whose blob is missing or corrupt."""
        bad = []
        for h in sorted(self.catalog_hashes()):
            path = self.blob_path(h)
            if not path.exists() or hashlib.sha256(path.read_bytes()).hexdigest() != h:
                bad.append(h)
        return bad

    def stats(self) -> StoreStats:
        files = list(self.iter_blob_files())
        return StoreStats(
            item_count=len(self._items),
            blob_count=len(files),
            total_bytes=sum(f.stat().st_size for f in files),
        )
